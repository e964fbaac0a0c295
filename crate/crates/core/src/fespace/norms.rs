//! Gram matrices of scalar spaces and per-component norms of product-space vectors.

use num_complex::Complex64;

use super::basis::CellGeometry;
use super::product::{Field, ProductSpace};
use super::space::LagrangeSpace;
use crate::linalg::{SparseMatrix, TripletBuilder};
use crate::quadrature::QuadratureRule;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GramKind {
    L2,
    H1Semi,
}

/// Mass (`L2`) or stiffness (`H1Semi`) matrix of a scalar space.
pub fn gram_matrix(space: &LagrangeSpace, kind: GramKind) -> SparseMatrix {
    let mesh = space.mesh();
    let elem = space.element();
    let rule = QuadratureRule::for_degree(2 * space.degree() + 2);
    let nloc = elem.num_nodes();
    let values: Vec<Vec<f64>> = rule.points.iter().map(|l| elem.eval(*l)).collect();
    let dvalues: Vec<Vec<[f64; 3]>> = rule.points.iter().map(|l| elem.eval_grad_bary(*l)).collect();
    let mut builder = TripletBuilder::with_capacity(
        space.dof_count(),
        space.dof_count(),
        mesh.num_triangles() * nloc * nloc,
    );
    let mut local = vec![0.0; nloc * nloc];
    for t in 0..mesh.num_triangles() {
        let geo = CellGeometry::new(mesh, t);
        local.iter_mut().for_each(|v| *v = 0.0);
        for q in 0..rule.len() {
            let w = rule.weights[q] * 2.0 * geo.area;
            match kind {
                GramKind::L2 => {
                    let v = &values[q];
                    for i in 0..nloc {
                        for j in 0..nloc {
                            local[i * nloc + j] += w * v[i] * v[j];
                        }
                    }
                }
                GramKind::H1Semi => {
                    let g: Vec<[f64; 2]> = dvalues[q].iter().map(|d| geo.gradient(*d)).collect();
                    for i in 0..nloc {
                        for j in 0..nloc {
                            local[i * nloc + j] += w * (g[i][0] * g[j][0] + g[i][1] * g[j][1]);
                        }
                    }
                }
            }
        }
        let dofs = space.cell_dofs(t);
        for i in 0..nloc {
            let Some(di) = dofs[i] else { continue };
            for j in 0..nloc {
                let Some(dj) = dofs[j] else { continue };
                builder.push(di, dj, local[i * nloc + j]);
            }
        }
    }
    builder.build()
}

/// `sqrt(x^H G x)` for a complex coefficient vector.
pub fn gram_norm(g: &SparseMatrix, x: &[Complex64]) -> f64 {
    let (re, im) = crate::linalg::vector::split_complex(x);
    (g.bilinear(&re, &re) + g.bilinear(&im, &im)).max(0.0).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComponentNorm {
    pub field: Field,
    pub l2: f64,
    pub h1_semi: f64,
}

impl ComponentNorm {
    pub fn h1(&self) -> f64 {
        self.l2.hypot(self.h1_semi)
    }
}

/// Mass and stiffness matrices of each distinct component space, computed once per product space.
#[derive(Debug, Clone)]
pub struct ComponentGrams {
    mass: Vec<SparseMatrix>,
    stiffness: Vec<SparseMatrix>,
}

impl ComponentGrams {
    pub fn new(ps: &ProductSpace) -> ComponentGrams {
        let mut mass: Vec<SparseMatrix> = Vec::with_capacity(7);
        let mut stiffness: Vec<SparseMatrix> = Vec::with_capacity(7);
        for f in Field::ALL {
            let reuse = Field::ALL[..f.index()]
                .iter()
                .position(|g| std::sync::Arc::ptr_eq(ps.space_arc(*g), ps.space_arc(f)));
            match reuse {
                Some(i) => {
                    mass.push(mass[i].clone());
                    stiffness.push(stiffness[i].clone());
                }
                None => {
                    mass.push(gram_matrix(ps.space(f), GramKind::L2));
                    stiffness.push(gram_matrix(ps.space(f), GramKind::H1Semi));
                }
            }
        }
        ComponentGrams { mass, stiffness }
    }

    pub fn mass(&self, f: Field) -> &SparseMatrix {
        &self.mass[f.index()]
    }

    pub fn stiffness(&self, f: Field) -> &SparseMatrix {
        &self.stiffness[f.index()]
    }

    /// `(x, y)_{H1}` of one component (complex, conjugate-linear in `x`).
    pub fn h1_inner(&self, ps: &ProductSpace, f: Field, x: &[Complex64], y: &[Complex64]) -> Complex64 {
        let xs = ps.component(f, x);
        let ys = ps.component(f, y);
        let my = self.mass(f).matvec_complex(ys);
        let ky = self.stiffness(f).matvec_complex(ys);
        let both: Vec<Complex64> = my.iter().zip(&ky).map(|(a, b)| a + b).collect();
        crate::linalg::cdot(xs, &both)
    }

    pub fn component_norms(&self, ps: &ProductSpace, x: &[Complex64]) -> Vec<ComponentNorm> {
        Field::ALL
            .iter()
            .map(|f| {
                let xs = ps.component(*f, x);
                ComponentNorm {
                    field: *f,
                    l2: gram_norm(self.mass(*f), xs),
                    h1_semi: gram_norm(self.stiffness(*f), xs),
                }
            })
            .collect()
    }
}

/// Per-component L2 norms and H1 seminorms of a (possibly complex) system vector.
pub fn component_norms(ps: &ProductSpace, x: &[Complex64]) -> Vec<ComponentNorm> {
    ComponentGrams::new(ps).component_norms(ps, x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fespace::Constraint;
    use crate::mesh::{build_builtin_domain, Domain, Mesh};
    use std::sync::Arc;

    fn factorial(n: usize) -> f64 {
        (1..=n).map(|k| k as f64).product()
    }

    #[test]
    fn mass_matrix_integrates_monomials() {
        // on [0,1]^2: int x^a y^b = 1 / ((a+1)(b+1))
        let mesh = Arc::new(build_builtin_domain(&Domain::UnitSquare, 0.5).unwrap());
        for degree in 1..=3 {
            let s = LagrangeSpace::new(mesh.clone(), degree, Constraint::None).unwrap();
            let m = gram_matrix(&s, GramKind::L2);
            for a in 0..=degree {
                for b in 0..=(degree - a) {
                    for c in 0..=degree {
                        for d in 0..=(degree - c) {
                            let f = s.interpolate(|p| p.x1.powi(a as i32) * p.x2.powi(b as i32));
                            let g = s.interpolate(|p| p.x1.powi(c as i32) * p.x2.powi(d as i32));
                            let exact = 1.0 / (((a + c + 1) * (b + d + 1)) as f64);
                            assert!((m.bilinear(&f, &g) - exact).abs() < 1e-12);
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn mass_matrix_on_reference_triangle() {
        // int_T x^a y^b over the reference triangle = a! b! / (a+b+2)!
        let mesh = Arc::new(Mesh::from_triangles(
            vec![
                crate::mesh::Point2::new(0.0, 0.0),
                crate::mesh::Point2::new(1.0, 0.0),
                crate::mesh::Point2::new(0.0, 1.0),
            ],
            vec![[0, 1, 2]],
        ));
        let s = LagrangeSpace::new(mesh, 3, Constraint::None).unwrap();
        let m = gram_matrix(&s, GramKind::L2);
        let one = vec![1.0; s.dof_count()];
        for a in 0..=3 {
            for b in 0..=(3 - a) {
                let f = s.interpolate(|p| p.x1.powi(a as i32) * p.x2.powi(b as i32));
                let exact = factorial(a) * factorial(b) / factorial(a + b + 2);
                assert!((m.bilinear(&one, &f) - exact).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn stiffness_of_linear_function() {
        let mesh = Arc::new(build_builtin_domain(&Domain::LShape, 0.5).unwrap());
        let s = LagrangeSpace::new(mesh, 2, Constraint::None).unwrap();
        let k = gram_matrix(&s, GramKind::H1Semi);
        let f = s.interpolate(|p| 2.0 * p.x1 - p.x2);
        // |grad f|^2 = 5 on an area-3 domain
        assert!((k.bilinear(&f, &f) - 15.0).abs() < 1e-12);
        let ones = vec![1.0; s.dof_count()];
        assert!(k.matvec(&ones).iter().all(|v| v.abs() < 1e-12));
    }
}
