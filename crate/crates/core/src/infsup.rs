//! Numerical estimate of the discrete inf-sup constant of the `(tau, rot phi)` coupling.
//!
//! With `K` the `H1_0` stiffness on `phi = (phi1, phi2)`, `M` the mass matrix of the `sigma`
//! space and `G` the coupling block, the squared generalized singular values are the
//! eigenvalues of `G K^-1 G^T tau = mu M tau`. They are computed from the saddle pencil
//!
//! ```text
//! [K  G^T] [v  ]        [0   0] [v  ]
//! [G   0 ] [tau]  = mu  [0  -M] [tau]
//! ```
//!
//! by shift-invert Arnoldi near zero.

use std::sync::Arc;

use serde::Serialize;
use thiserror::Error;

use crate::assembly::{assemble_terms, AssemblyError, Op, Term, Weight};
use crate::eigen::{shift_invert_arnoldi, ArnoldiOptions, EigenError};
use crate::fespace::{gram_matrix, FeError, Field, GramKind, ProductDegrees, ProductSpace};
use crate::linalg::{SparseMatrix, TripletBuilder};
use crate::mesh::Mesh;

/// Eigenvalues `mu` below this are counted as zero modes.
pub const ZERO_MODE_TOL: f64 = 1e-8;

const SHIFT: f64 = -0.1;
const MAX_K: usize = 96;

const ROT_TAU: [Term; 2] = [
    Term {
        test: (Field::Sigma, Op::Val),
        trial: (Field::Phi2, Op::Dx),
        weight: Weight::Unit,
        sign: 1.0,
    },
    Term {
        test: (Field::Sigma, Op::Val),
        trial: (Field::Phi1, Op::Dy),
        weight: Weight::Unit,
        sign: -1.0,
    },
];

#[derive(Debug, Error)]
pub enum InfSupError {
    #[error(transparent)]
    Fe(#[from] FeError),
    #[error(transparent)]
    Assembly(#[from] AssemblyError),
    #[error(transparent)]
    Eigen(#[from] EigenError),
}

#[derive(Debug, Clone, Serialize)]
pub struct InfSupEstimate {
    pub level: usize,
    pub h: f64,
    pub sigma_degree: usize,
    pub phi_dofs: usize,
    pub sigma_dofs: usize,
    /// Square root of the smallest nonzero `mu`; `None` when every computed mode was zero.
    pub beta: Option<f64>,
    /// Number of `mu` below [`ZERO_MODE_TOL`] among the computed modes (constants included).
    pub zero_modes: usize,
}

/// Coupling block `G` (sigma rows, phi1|phi2 columns), phi stiffness `K` and sigma mass `M`.
pub fn rot_coupling(ps: &ProductSpace) -> Result<(SparseMatrix, SparseMatrix, SparseMatrix), AssemblyError> {
    let full = assemble_terms(ps, &ROT_TAU, None, false)?;
    let phi = ps.offset(Field::Phi1)..ps.offset(Field::Phi2) + ps.dim(Field::Phi2);
    let g = full.block(ps.range(Field::Sigma), phi);
    let k1 = gram_matrix(ps.space(Field::Phi1), GramKind::H1Semi);
    let n1 = k1.nrows();
    let mut kb = TripletBuilder::with_capacity(2 * n1, 2 * n1, 2 * k1.nnz());
    for (i, j, v) in k1.triplets() {
        kb.push(i, j, v);
        kb.push(n1 + i, n1 + j, v);
    }
    let m = gram_matrix(ps.space(Field::Sigma), GramKind::L2);
    Ok((g, kb.build(), m))
}

/// Saddle pencil `(A, B)` whose finite eigenvalues are the squared singular values.
pub fn saddle_pencil(g: &SparseMatrix, k: &SparseMatrix, m: &SparseMatrix) -> (SparseMatrix, SparseMatrix) {
    let (nv, ns) = (k.nrows(), m.nrows());
    let n = nv + ns;
    let mut a = TripletBuilder::with_capacity(n, n, k.nnz() + 2 * g.nnz());
    for (i, j, v) in k.triplets() {
        a.push(i, j, v);
    }
    for (i, j, v) in g.triplets() {
        a.push(nv + i, j, v);
        a.push(j, nv + i, v);
    }
    let mut b = TripletBuilder::with_capacity(n, n, m.nnz());
    for (i, j, v) in m.triplets() {
        b.push(nv + i, nv + j, -v);
    }
    (a.build(), b.build())
}

/// Estimates the inf-sup constant on one mesh.
pub fn inf_sup_constant(mesh: Arc<Mesh>, m: usize, sigma_degree: usize, seed: u64) -> Result<InfSupEstimate, InfSupError> {
    let level = mesh.level();
    let h = mesh.mesh_size();
    let ps = ProductSpace::new(mesh, ProductDegrees::with_sigma(m, sigma_degree))?;
    let (g, k, mm) = rot_coupling(&ps)?;
    let (a, b) = saddle_pencil(&g, &k, &mm);
    let mut want = 4;
    loop {
        let opts = ArnoldiOptions {
            k: want,
            shift: SHIFT,
            tol: 1e-9,
            seed,
            ..ArnoldiOptions::default()
        };
        let res = shift_invert_arnoldi(&a, &b, &opts)?;
        let mut mu: Vec<f64> = res.pairs.iter().map(|p| p.lambda.re).collect();
        mu.sort_by(f64::total_cmp);
        let zero_modes = mu.iter().filter(|v| v.abs() < ZERO_MODE_TOL).count();
        let smallest = mu.iter().copied().find(|v| *v >= ZERO_MODE_TOL);
        if smallest.is_some() || want >= MAX_K || mu.len() < want {
            return Ok(InfSupEstimate {
                level,
                h,
                sigma_degree,
                phi_dofs: k.nrows(),
                sigma_dofs: mm.nrows(),
                beta: smallest.map(f64::sqrt),
                zero_modes,
            });
        }
        want *= 2;
    }
}

/// Inf-sup estimates on `initial` and its `refinements` red refinements.
pub fn inf_sup_study(
    initial: Mesh,
    refinements: usize,
    m: usize,
    sigma_degree: usize,
    seed: u64,
) -> Result<Vec<InfSupEstimate>, InfSupError> {
    let mut mesh = Arc::new(initial.into_root());
    let mut out = Vec::with_capacity(refinements + 1);
    for i in 0..=refinements {
        if i > 0 {
            mesh = Arc::new(mesh.refine_red());
        }
        out.push(inf_sup_constant(mesh.clone(), m, sigma_degree, seed)?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{dense_eig, DenseLu};
    use crate::mesh::{build_builtin_domain, Domain};

    #[test]
    fn matches_dense_schur_complement() {
        let mesh = Arc::new(build_builtin_domain(&Domain::UnitSquare, 0.5).unwrap());
        let ps = ProductSpace::new(mesh.clone(), ProductDegrees::taylor_hood(2)).unwrap();
        let (g, k, m) = rot_coupling(&ps).unwrap();
        // mu are the eigenvalues of M^-1 G K^-1 G^T
        let kd = DenseLu::factorize(&k.to_dense()).unwrap();
        let gd = g.to_dense();
        let kinv_gt = kd.solve_matrix(&gd.transpose());
        let s = gd.matmul(&kinv_gt);
        let md = DenseLu::factorize(&m.to_dense()).unwrap();
        let op = md.solve_matrix(&s);
        let mut mu: Vec<f64> = dense_eig(&op).unwrap().iter().map(|p| p.value.re).collect();
        mu.sort_by(f64::total_cmp);
        assert!(mu[0].abs() < 1e-10, "constant mode {}", mu[0]);
        let est = inf_sup_constant(mesh, 2, 1, 7).unwrap();
        assert_eq!(est.zero_modes, 1);
        let beta = est.beta.unwrap();
        assert!((beta * beta - mu[1]).abs() < 1e-8 * mu[1], "{beta} vs {}", mu[1].sqrt());
    }
}
