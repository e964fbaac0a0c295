//! Assembly of the mixed transmission pencil `(A, B)` over a [`ProductSpace`].
//!
//! Rows are indexed by test functions `(z, psi1, psi2, v, q, tau, s)` and columns by
//! trial functions `(y, phi1, phi2, u, p, sigma, r)`, in the product-space order, with
//! the zero-mean multiplier of `sigma` as the last row and column.

use thiserror::Error;

use crate::coefficient::Coefficient;
use crate::fespace::{CellGeometry, Field, GramKind, LagrangeSpace, ProductSpace};
use crate::linalg::{SparseMatrix, TripletBuilder};
use crate::mesh::Point2;
use crate::quadrature::QuadratureRule;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AssemblyError {
    #[error("invalid refraction bounds: need 0 < n_s <= n_b, got n_s = {n_s}, n_b = {n_b}")]
    BadBounds { n_s: f64, n_b: f64 },
    #[error("no formulation applies: need n_s > 1 (case I) or n_b < 1 (case II), got n_s = {n_s}, n_b = {n_b}")]
    NoCase { n_s: f64, n_b: f64 },
    #[error("case {case} contradicts the declared bounds n_s = {n_s}, n_b = {n_b}")]
    CaseMismatch { case: Case, n_s: f64, n_b: f64 },
    #[error("n({x1}, {x2}) = {value} lies outside the declared bounds [{n_s}, {n_b}]")]
    OutOfBounds {
        x1: f64,
        x2: f64,
        value: f64,
        n_s: f64,
        n_b: f64,
    },
}

/// Which rewriting of the fourth-order problem is used.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Case {
    /// `n_s > 1`, weight `alpha = 1 / (n - 1)`.
    I,
    /// `n_b < 1`, weight `beta = n / (1 - n)`.
    II,
}

impl std::fmt::Display for Case {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Case::I => write!(f, "I"),
            Case::II => write!(f, "II"),
        }
    }
}

/// Refraction coefficient with its declared bounds and the resulting case.
#[derive(Debug, Clone, PartialEq)]
pub struct Material {
    pub n: Coefficient,
    pub n_s: f64,
    pub n_b: f64,
    pub case: Case,
}

impl Material {
    /// Validates the bounds and selects the case (checked against `case` when given).
    pub fn new(n: Coefficient, n_s: f64, n_b: f64, case: Option<Case>) -> Result<Material, AssemblyError> {
        if !(n_s > 0.0 && n_s <= n_b && n_b.is_finite()) {
            return Err(AssemblyError::BadBounds { n_s, n_b });
        }
        let auto = if n_s > 1.0 {
            Case::I
        } else if n_b < 1.0 {
            Case::II
        } else {
            return Err(AssemblyError::NoCase { n_s, n_b });
        };
        if let Some(c) = case {
            if c != auto {
                return Err(AssemblyError::CaseMismatch { case: c, n_s, n_b });
            }
        }
        Ok(Material { n, n_s, n_b, case: auto })
    }

    /// Constant coefficient with tight bounds `n_s = n_b = n`.
    pub fn constant(n: f64) -> Result<Material, AssemblyError> {
        Material::new(Coefficient::Constant(n), n, n, None)
    }

    /// `(w, w_yy, w_divdiv)`: the weight of the mixed `y`/`div` terms, of `(y, z)` and of
    /// `(div phi, div psi)`.
    pub fn weights(&self, n: f64) -> (f64, f64, f64) {
        match self.case {
            Case::I => {
                let a = 1.0 / (n - 1.0);
                (a, 1.0 + a, a)
            }
            Case::II => {
                let b = n / (1.0 - n);
                (b, b, 1.0 + b)
            }
        }
    }

    /// The coercivity constant `(1/(n_b - 1)) (1 - sqrt(1/n_s))` of the case I `(y, phi)` block.
    pub fn coercivity_constant(&self) -> f64 {
        (1.0 / (self.n_b - 1.0)) * (1.0 - (1.0 / self.n_s).sqrt())
    }

    fn eval_checked(&self, p: &Point2) -> Result<f64, AssemblyError> {
        let v = self.n.eval(p);
        let slack = 1e-12 * self.n_b.abs().max(1.0);
        if !(v >= self.n_s - slack && v <= self.n_b + slack) {
            return Err(AssemblyError::OutOfBounds {
                x1: p.x1,
                x2: p.x2,
                value: v,
                n_s: self.n_s,
                n_b: self.n_b,
            });
        }
        Ok(v)
    }
}

/// Right-hand form of the pencil.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BForm {
    /// `(phi, grad v) - (p, v) - (u, q)`
    #[default]
    Standard,
    /// `(grad u, grad v) - (p, v) - (u, q)`, a symmetric alternative with the same solutions.
    GradGrad,
}

/// Differential operator applied to a shape function.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Op {
    Val,
    Dx,
    Dy,
}

/// Pointwise coefficient of a term.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Weight {
    Unit,
    /// `alpha` (case I) or `beta` (case II).
    Mixed,
    /// `1 + alpha` or `beta`.
    YY,
    /// `alpha` or `1 + beta`.
    DivDiv,
}

/// `sign * (weight * trial_op(trial), test_op(test))`
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Term {
    pub test: (Field, Op),
    pub trial: (Field, Op),
    pub weight: Weight,
    pub sign: f64,
}

const fn term(test: (Field, Op), trial: (Field, Op), weight: Weight, sign: f64) -> Term {
    Term {
        test,
        trial,
        weight,
        sign,
    }
}

use Field::{Phi1, Phi2, Sigma, P, R, U, Y};
use Op::{Dx, Dy, Val};

/// `(div phi, div psi)`, unweighted.
pub const DIV_DIV: [Term; 4] = [
    term((Phi1, Dx), (Phi1, Dx), Weight::Unit, 1.0),
    term((Phi1, Dx), (Phi2, Dy), Weight::Unit, 1.0),
    term((Phi2, Dy), (Phi1, Dx), Weight::Unit, 1.0),
    term((Phi2, Dy), (Phi2, Dy), Weight::Unit, 1.0),
];

/// `(rot phi, rot psi)` with `rot phi = d phi2/dx1 - d phi1/dx2`.
pub const ROT_ROT: [Term; 4] = [
    term((Phi1, Dy), (Phi1, Dy), Weight::Unit, 1.0),
    term((Phi1, Dy), (Phi2, Dx), Weight::Unit, -1.0),
    term((Phi2, Dx), (Phi1, Dy), Weight::Unit, -1.0),
    term((Phi2, Dx), (Phi2, Dx), Weight::Unit, 1.0),
];

/// Every term of `a_alpha` / `a_beta` except the multiplier border.
pub const A_TERMS: [Term; 27] = [
    // ((1+alpha) y, z), (alpha div phi, z), -(p, z)
    term((Y, Val), (Y, Val), Weight::YY, 1.0),
    term((Y, Val), (Phi1, Dx), Weight::Mixed, 1.0),
    term((Y, Val), (Phi2, Dy), Weight::Mixed, 1.0),
    term((Y, Val), (P, Val), Weight::Unit, -1.0),
    // (alpha y, div psi)
    term((Phi1, Dx), (Y, Val), Weight::Mixed, 1.0),
    term((Phi2, Dy), (Y, Val), Weight::Mixed, 1.0),
    // (alpha div phi, div psi)
    term((Phi1, Dx), (Phi1, Dx), Weight::DivDiv, 1.0),
    term((Phi1, Dx), (Phi2, Dy), Weight::DivDiv, 1.0),
    term((Phi2, Dy), (Phi1, Dx), Weight::DivDiv, 1.0),
    term((Phi2, Dy), (Phi2, Dy), Weight::DivDiv, 1.0),
    // (rot phi, rot psi)
    term((Phi1, Dy), (Phi1, Dy), Weight::Unit, 1.0),
    term((Phi1, Dy), (Phi2, Dx), Weight::Unit, -1.0),
    term((Phi2, Dx), (Phi1, Dy), Weight::Unit, -1.0),
    term((Phi2, Dx), (Phi2, Dx), Weight::Unit, 1.0),
    // (sigma, rot psi)
    term((Phi2, Dx), (Sigma, Val), Weight::Unit, 1.0),
    term((Phi1, Dy), (Sigma, Val), Weight::Unit, -1.0),
    // -(grad r, psi)
    term((Phi1, Val), (R, Dx), Weight::Unit, -1.0),
    term((Phi2, Val), (R, Dy), Weight::Unit, -1.0),
    // (grad r, grad v)
    term((U, Dx), (R, Dx), Weight::Unit, 1.0),
    term((U, Dy), (R, Dy), Weight::Unit, 1.0),
    // -(y, q)
    term((P, Val), (Y, Val), Weight::Unit, -1.0),
    // (rot phi, tau)
    term((Sigma, Val), (Phi2, Dx), Weight::Unit, 1.0),
    term((Sigma, Val), (Phi1, Dy), Weight::Unit, -1.0),
    // -(phi, grad s)
    term((R, Dx), (Phi1, Val), Weight::Unit, -1.0),
    term((R, Dy), (Phi2, Val), Weight::Unit, -1.0),
    // (grad u, grad s)
    term((R, Dx), (U, Dx), Weight::Unit, 1.0),
    term((R, Dy), (U, Dy), Weight::Unit, 1.0),
];

/// `(phi, grad v) - (p, v) - (u, q)`
pub const B_TERMS: [Term; 4] = [
    term((U, Dx), (Phi1, Val), Weight::Unit, 1.0),
    term((U, Dy), (Phi2, Val), Weight::Unit, 1.0),
    term((U, Val), (P, Val), Weight::Unit, -1.0),
    term((P, Val), (U, Val), Weight::Unit, -1.0),
];

/// `(grad u, grad v) - (p, v) - (u, q)`
pub const B_GRAD_TERMS: [Term; 4] = [
    term((U, Dx), (U, Dx), Weight::Unit, 1.0),
    term((U, Dy), (U, Dy), Weight::Unit, 1.0),
    term((U, Val), (P, Val), Weight::Unit, -1.0),
    term((P, Val), (U, Val), Weight::Unit, -1.0),
];

/// Shape function values and barycentric derivatives of one component space at the quadrature points.
struct Tabulation {
    nloc: usize,
    vals: Vec<f64>,
    dbary: Vec<[f64; 3]>,
}

impl Tabulation {
    fn new(space: &LagrangeSpace, rule: &QuadratureRule) -> Tabulation {
        let elem = space.element();
        let nloc = elem.num_nodes();
        let mut vals = Vec::with_capacity(rule.len() * nloc);
        let mut dbary = Vec::with_capacity(rule.len() * nloc);
        for l in &rule.points {
            vals.extend(elem.eval(*l));
            dbary.extend(elem.eval_grad_bary(*l));
        }
        Tabulation { nloc, vals, dbary }
    }
}

/// Assembles `sum_terms` over the product space into a `system_dim` square matrix.
///
/// With `border = true` the zero-mean multiplier row and column (`int tau`, `int sigma`) are added.
pub fn assemble_terms(
    ps: &ProductSpace,
    terms: &[Term],
    material: Option<&Material>,
    border: bool,
) -> Result<SparseMatrix, AssemblyError> {
    let mesh = ps.mesh();
    let m = ps.degrees().m;
    let rule = QuadratureRule::for_degree(2 * m + 2);
    let nq = rule.len();
    let tabs: Vec<Tabulation> = Field::ALL.iter().map(|f| Tabulation::new(ps.space(*f), &rule)).collect();
    let n = ps.system_dim();
    let mut builder = TripletBuilder::new(n, n);

    // group terms by (test field, trial field) so each block is scattered once per element
    let mut pairs: Vec<(Field, Field)> = Vec::new();
    for t in terms {
        let key = (t.test.0, t.trial.0);
        if !pairs.contains(&key) {
            pairs.push(key);
        }
    }
    let mut local: Vec<Vec<f64>> = pairs
        .iter()
        .map(|(a, b)| vec![0.0; tabs[a.index()].nloc * tabs[b.index()].nloc])
        .collect();

    let needs_material = terms.iter().any(|t| t.weight != Weight::Unit);
    let mut weights = vec![[0.0f64; 4]; nq];
    let mut grads: Vec<Vec<[f64; 2]>> = tabs.iter().map(|t| vec![[0.0; 2]; nq * t.nloc]).collect();

    for t in 0..mesh.num_triangles() {
        let geo = CellGeometry::new(mesh, t);
        for (q, l) in rule.points.iter().enumerate() {
            let w = rule.weights[q] * 2.0 * geo.area;
            let (a, yy, dd) = if needs_material {
                let mat = material.expect("weighted terms require a material");
                let nval = mat.eval_checked(&geo.point(*l))?;
                mat.weights(nval)
            } else {
                (0.0, 0.0, 0.0)
            };
            weights[q] = [w, w * a, w * yy, w * dd];
        }
        for (fi, tab) in tabs.iter().enumerate() {
            for (g, d) in grads[fi].iter_mut().zip(&tab.dbary) {
                *g = geo.gradient(*d);
            }
        }
        for buf in &mut local {
            buf.iter_mut().for_each(|v| *v = 0.0);
        }
        for term in terms {
            let pi = pairs.iter().position(|p| *p == (term.test.0, term.trial.0)).unwrap();
            let (tf, to) = term.test;
            let (sf, so) = term.trial;
            let (tt, st) = (&tabs[tf.index()], &tabs[sf.index()]);
            let (tg, sg) = (&grads[tf.index()], &grads[sf.index()]);
            let widx = match term.weight {
                Weight::Unit => 0,
                Weight::Mixed => 1,
                Weight::YY => 2,
                Weight::DivDiv => 3,
            };
            let buf = &mut local[pi];
            let ns = st.nloc;
            for q in 0..nq {
                let w = term.sign * weights[q][widx];
                if w == 0.0 {
                    continue;
                }
                for i in 0..tt.nloc {
                    let a = w * apply(to, tt, tg, q, i);
                    if a == 0.0 {
                        continue;
                    }
                    let row = &mut buf[i * ns..(i + 1) * ns];
                    for (j, r) in row.iter_mut().enumerate() {
                        *r += a * apply(so, st, sg, q, j);
                    }
                }
            }
        }
        for ((tf, sf), buf) in pairs.iter().zip(&local) {
            let (ro, co) = (ps.offset(*tf), ps.offset(*sf));
            let tdofs = ps.space(*tf).cell_dofs(t);
            let sdofs = ps.space(*sf).cell_dofs(t);
            let ns = sdofs.len();
            for (i, di) in tdofs.iter().enumerate() {
                let Some(di) = di else { continue };
                for (j, dj) in sdofs.iter().enumerate() {
                    let Some(dj) = dj else { continue };
                    let v = buf[i * ns + j];
                    if v != 0.0 {
                        builder.push(ro + di, co + dj, v);
                    }
                }
            }
        }
        if border {
            let tab = &tabs[Sigma.index()];
            let kappa = ps.multiplier_index();
            let so = ps.offset(Sigma);
            for (i, di) in ps.space(Sigma).cell_dofs(t).iter().enumerate() {
                let Some(di) = di else { continue };
                let integral: f64 = (0..nq).map(|q| weights[q][0] * tab.vals[q * tab.nloc + i]).sum();
                builder.push(so + di, kappa, integral);
                builder.push(kappa, so + di, integral);
            }
        }
    }
    Ok(builder.build())
}

#[inline]
fn apply(op: Op, tab: &Tabulation, grads: &[[f64; 2]], q: usize, i: usize) -> f64 {
    let k = q * tab.nloc + i;
    match op {
        Op::Val => tab.vals[k],
        Op::Dx => grads[k][0],
        Op::Dy => grads[k][1],
    }
}

/// The left-hand matrix `A` (case I: `a_alpha`, case II: `a_beta`) including the multiplier border.
pub fn assemble_a(ps: &ProductSpace, material: &Material) -> Result<SparseMatrix, AssemblyError> {
    assemble_terms(ps, &A_TERMS, Some(material), true)
}

/// The right-hand matrix `B`; rows and columns outside `u`, `p` (and `phi` for the standard form) vanish.
pub fn assemble_b(ps: &ProductSpace, form: BForm) -> SparseMatrix {
    let terms: &[Term] = match form {
        BForm::Standard => &B_TERMS,
        BForm::GradGrad => &B_GRAD_TERMS,
    };
    assemble_terms(ps, terms, None, false).expect("unweighted terms cannot fail")
}

/// Mass or stiffness matrix of a scalar component space.
pub fn assemble_gram(space: &LagrangeSpace, kind: GramKind) -> SparseMatrix {
    crate::fespace::gram_matrix(space, kind)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coefficient::parse_coefficient;
    use crate::fespace::ProductDegrees;
    use crate::mesh::{build_builtin_domain, Domain};
    use std::sync::Arc;

    fn square_space(h: f64, m: usize) -> ProductSpace {
        let mesh = Arc::new(build_builtin_domain(&Domain::UnitSquare, h).unwrap());
        ProductSpace::new(mesh, ProductDegrees::taylor_hood(m)).unwrap()
    }

    #[test]
    fn case_selection() {
        assert_eq!(Material::constant(16.0).unwrap().case, Case::I);
        assert_eq!(Material::constant(0.5).unwrap().case, Case::II);
        assert!(matches!(Material::constant(1.0), Err(AssemblyError::NoCase { .. })));
        let err = Material::new(Coefficient::Constant(16.0), 0.2, 0.5, Some(Case::I)).unwrap_err();
        assert!(matches!(err, AssemblyError::CaseMismatch { .. }));
    }

    #[test]
    fn coefficient_outside_bounds_is_rejected() {
        let ps = square_space(0.5, 2);
        let n = parse_coefficient("x1^2 + x2^2 + 4").unwrap();
        let mat = Material::new(n.clone(), 4.0, 6.0, None).unwrap();
        assert!(assemble_a(&ps, &mat).is_ok());
        let tight = Material::new(n, 4.0, 5.0, None).unwrap();
        assert!(matches!(assemble_a(&ps, &tight), Err(AssemblyError::OutOfBounds { .. })));
        let n = parse_coefficient("10 * x1 + 2").unwrap();
        let bad = Material::new(n, 2.0, 5.0, None).unwrap();
        assert!(matches!(assemble_a(&ps, &bad), Err(AssemblyError::OutOfBounds { .. })));
    }

    #[test]
    fn a_is_symmetric_and_b_is_not() {
        let ps = square_space(0.5, 2);
        let a = assemble_a(&ps, &Material::constant(16.0).unwrap()).unwrap();
        let (y, p) = (ps.range(Y), ps.range(P));
        // -(p, z) sits in z rows / p columns, -(y, q) in q rows / y columns, and they mirror each other
        let zp = a.block(y.clone(), p.clone());
        let qy = a.block(p.clone(), y.clone());
        assert!(zp.nnz() > 0);
        assert!(zp.transpose().add_scaled(-1.0, &qy).max_abs() < 1e-15);
        for i in p.clone() {
            let (cols, _) = a.row(i);
            assert!(cols.iter().all(|c| y.contains(c)));
        }
        assert!(a.asymmetry() < 1e-14 * a.max_abs());
        let b = assemble_b(&ps, BForm::Standard);
        assert!(b.asymmetry() > 0.1 * b.max_abs());
    }

    #[test]
    fn b_structure() {
        let ps = square_space(0.5, 2);
        let b = assemble_b(&ps, BForm::Standard);
        let allowed_rows = [ps.range(U), ps.range(P)];
        for (i, j, _) in b.triplets() {
            assert!(allowed_rows.iter().any(|r| r.contains(&i)));
            assert!(![Y, Sigma, R].iter().any(|f| ps.range(*f).contains(&j)));
        }
        // (p, v) and (u, q) are transposes of each other
        let pv = b.block(ps.range(U), ps.range(P));
        let uq = b.block(ps.range(P), ps.range(U));
        assert!(pv.transpose().add_scaled(-1.0, &uq).max_abs() < 1e-15);
        // the grad-grad form is symmetric
        assert!(assemble_b(&ps, BForm::GradGrad).asymmetry() < 1e-14);
        // sigma/r supported vectors are annihilated
        let mut x = vec![0.0; ps.system_dim()];
        for f in [Sigma, R] {
            for i in ps.range(f) {
                x[i] = 1.0 + i as f64;
            }
        }
        assert!(b.matvec(&x).iter().all(|v| *v == 0.0));
    }

    #[test]
    fn b_is_case_independent() {
        let ps = square_space(0.5, 2);
        let b1 = assemble_b(&ps, BForm::Standard);
        let b2 = assemble_terms(&ps, &B_TERMS, Some(&Material::constant(0.25).unwrap()), false).unwrap();
        assert_eq!(b1, b2);
    }

    #[test]
    fn alpha_terms_scale_linearly() {
        let ps = square_space(0.5, 2);
        let a1 = assemble_a(&ps, &Material::constant(24.0).unwrap()).unwrap();
        let a2 = assemble_a(&ps, &Material::constant(47.0).unwrap()).unwrap();
        let a_inf = assemble_terms(
            &ps,
            &A_TERMS
                .iter()
                .copied()
                .filter(|t| t.weight == Weight::Unit)
                .collect::<Vec<_>>(),
            None,
            true,
        )
        .unwrap();
        // alpha = 1/23 and 1/46: a_alpha - a_0 halves (up to the identity part of (1+alpha)(y,z))
        let yy_unit = assemble_terms(&ps, &[term((Y, Val), (Y, Val), Weight::Unit, 1.0)], None, false).unwrap();
        let base = a_inf.add_scaled(1.0, &yy_unit);
        let d1 = a1.add_scaled(-1.0, &base);
        let d2 = a2.add_scaled(-1.0, &base);
        let diff = d1.add_scaled(-2.0, &d2);
        assert!(diff.max_abs() < 1e-13 * d1.max_abs().max(1.0));
    }

    #[test]
    fn coercivity_on_y_phi_vectors() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for (h, text, ns, nb) in [(0.5, "16", 16.0, 16.0), (0.25, "x1^2 + x2^2 + 4", 4.0, 6.0)] {
            let ps = square_space(h, 2);
            let mat = Material::new(parse_coefficient(text).unwrap(), ns, nb, None).unwrap();
            let a = assemble_a(&ps, &mat).unwrap();
            let dd = assemble_terms(&ps, &DIV_DIV, None, false).unwrap();
            let rr = assemble_terms(&ps, &ROT_ROT, None, false).unwrap();
            let yy = assemble_terms(&ps, &[term((Y, Val), (Y, Val), Weight::Unit, 1.0)], None, false).unwrap();
            let c = mat.coercivity_constant();
            for _ in 0..50 {
                let mut w = vec![0.0; ps.system_dim()];
                for f in [Y, Phi1, Phi2] {
                    for i in ps.range(f) {
                        w[i] = rng.random_range(-1.0..1.0);
                    }
                }
                let lhs = a.bilinear(&w, &w);
                let rhs = c * (yy.bilinear(&w, &w) + dd.bilinear(&w, &w)) + rr.bilinear(&w, &w);
                assert!(lhs >= rhs - 1e-10, "{lhs} < {rhs}");
            }
        }
    }

    #[test]
    fn equal_order_p_makes_a_singular() {
        let mesh = Arc::new(build_builtin_domain(&Domain::UnitSquare, 0.5).unwrap());
        let mat = Material::constant(16.0).unwrap();
        let good = ProductSpace::new(mesh.clone(), ProductDegrees::taylor_hood(2)).unwrap();
        assert!(crate::linalg::SparseLu::factorize(&assemble_a(&good, &mat).unwrap()).is_ok());
        let bad = ProductSpace::new(mesh, ProductDegrees::new(2, 1, 2)).unwrap();
        assert!(crate::linalg::SparseLu::factorize(&assemble_a(&bad, &mat).unwrap()).is_err());
    }
}
