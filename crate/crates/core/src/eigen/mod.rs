//! Generalized eigenvalue solvers for the transmission pencil.

pub mod arnoldi;
pub mod order;

use num_complex::Complex64;
use serde::Serialize;
use thiserror::Error;

use crate::linalg::{DenseError, LuError};

pub use arnoldi::{normalize_phase, residual, shift_invert_arnoldi, ArnoldiOptions, ArnoldiResult, EigenPair};
pub use order::{argument, compare_eqslantless, eqslantless, sort_eqslantless};

#[derive(Debug, Error)]
pub enum EigenError {
    #[error("A - {shift} B cannot be factorized ({source}); perturb the shift slightly")]
    SingularShift { shift: f64, source: LuError },
    #[error("invalid eigenproblem: {0}")]
    BadInput(String),
    #[error(transparent)]
    Dense(#[from] DenseError),
    #[error(transparent)]
    Lu(#[from] LuError),
}

/// A non-real value without a conjugate partner.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClosureViolation {
    pub index: usize,
    pub re: f64,
    pub im: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Default)]
pub struct ClosureReport {
    pub violations: Vec<ClosureViolation>,
}

impl ClosureReport {
    pub fn is_closed(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks that every non-real value has its own partner within `tol * max(1, |lambda|)` of its conjugate.
///
/// Values with `|Im| <= tol * max(1, |lambda|)` count as real. Partners are matched one to one.
pub fn verify_conjugate_closure(values: &[Complex64], tol: f64) -> ClosureReport {
    let scale = |z: Complex64| tol * z.norm().max(1.0);
    let mut used = vec![false; values.len()];
    let mut violations = Vec::new();
    for (i, z) in values.iter().enumerate() {
        if z.im.abs() <= scale(*z) || used[i] {
            continue;
        }
        let partner = (0..values.len())
            .filter(|&j| j != i && !used[j] && values[j].im.abs() > scale(values[j]))
            .filter(|&j| (values[j] - z.conj()).norm() <= scale(*z))
            .min_by(|&a, &b| (values[a] - z.conj()).norm().total_cmp(&(values[b] - z.conj()).norm()));
        match partner {
            Some(j) => {
                used[i] = true;
                used[j] = true;
            }
            None => violations.push(ClosureViolation {
                index: i,
                re: z.re,
                im: z.im,
            }),
        }
    }
    ClosureReport { violations }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn closure_examples() {
        assert!(verify_conjugate_closure(&[c(2.0, 0.0), c(3.0, 1.0), c(3.0, -1.0)], 1e-6).is_closed());
        let r = verify_conjugate_closure(&[c(3.0, 1.0)], 1e-6);
        assert_eq!(r.violations.len(), 1);
        assert_eq!(r.violations[0].index, 0);
        let listed = [
            c(15.2871, -9.2904),
            c(15.2871, 9.2904),
            c(25.3979, 0.0),
            c(25.3979, 0.0),
            c(27.9052, 0.0),
            c(35.5305, 0.0),
        ];
        assert!(verify_conjugate_closure(&listed, 1e-6).is_closed());
        // partners are not shared
        assert!(!verify_conjugate_closure(&[c(3.0, 1.0), c(3.0, 1.0), c(3.0, -1.0)], 1e-6).is_closed());
    }
}
