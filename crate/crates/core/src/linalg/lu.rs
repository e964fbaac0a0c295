//! Sparse LU factorization.
//!
//! Numeric work is delegated to faer's supernodal/simplicial sparse LU (partial
//! pivoting with a COLAMD fill-reducing column ordering). This wrapper adds the
//! structural and numerical singularity checks: empty rows or columns are
//! rejected up front and a Hager–Higham estimate of the 1-norm condition number
//! flags numerically singular matrices.

use faer::linalg::solvers::Solve;
use faer::sparse::{SparseColMat, Triplet};
use faer::MatMut;
use num_complex::Complex64;
use thiserror::Error;

use super::sparse::SparseMatrix;

/// Condition estimates above this value are treated as singular.
pub const SINGULAR_CONDITION: f64 = 1e14;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LuError {
    #[error("matrix is not square ({0}x{1})")]
    NotSquare(usize, usize),
    #[error("matrix is structurally singular: row {0} has no entries")]
    EmptyRow(usize),
    #[error("matrix is structurally singular: column {0} has no entries")]
    EmptyColumn(usize),
    #[error("matrix is structurally singular (no pivot available at step {0})")]
    StructurallySingular(usize),
    #[error("matrix is numerically singular (estimated 1-norm condition number {0:.3e})")]
    NumericallySingular(f64),
    #[error("sparse factorization failed: {0}")]
    Backend(String),
}

/// Factorization `P_r A P_c = L U` of a square sparse matrix.
pub struct SparseLu {
    n: usize,
    lu: faer::sparse::linalg::solvers::Lu<usize, f64>,
    condition_estimate: f64,
}

impl std::fmt::Debug for SparseLu {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SparseLu")
            .field("n", &self.n)
            .field("condition_estimate", &self.condition_estimate)
            .finish()
    }
}

impl SparseLu {
    pub fn factorize(a: &SparseMatrix) -> Result<SparseLu, LuError> {
        let n = a.nrows();
        if n != a.ncols() {
            return Err(LuError::NotSquare(a.nrows(), a.ncols()));
        }
        let mut col_used = vec![false; n];
        for i in 0..n {
            let (cols, _) = a.row(i);
            if cols.is_empty() {
                return Err(LuError::EmptyRow(i));
            }
            for c in cols {
                col_used[*c] = true;
            }
        }
        if let Some(j) = col_used.iter().position(|u| !u) {
            return Err(LuError::EmptyColumn(j));
        }
        let triplets: Vec<Triplet<usize, usize, f64>> = a.triplets().map(|(i, j, v)| Triplet::new(i, j, v)).collect();
        let mat = SparseColMat::<usize, f64>::try_new_from_triplets(n, n, &triplets)
            .map_err(|e| LuError::Backend(format!("{e:?}")))?;
        let lu = mat.sp_lu().map_err(|e| match e {
            faer::sparse::linalg::LuError::SymbolicSingular { index } => LuError::StructurallySingular(index),
            other => LuError::Backend(format!("{other:?}")),
        })?;
        let mut f = SparseLu {
            n,
            lu,
            condition_estimate: f64::NAN,
        };
        let cond = a.norm1() * f.inverse_norm1_estimate();
        f.condition_estimate = cond;
        if !cond.is_finite() || cond > SINGULAR_CONDITION {
            return Err(LuError::NumericallySingular(cond));
        }
        Ok(f)
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Estimated 1-norm condition number of the factored matrix.
    pub fn condition_estimate(&self) -> f64 {
        self.condition_estimate
    }

    pub fn solve_in_place(&self, b: &mut [f64]) {
        assert_eq!(b.len(), self.n);
        let n = self.n;
        self.lu.solve_in_place(MatMut::from_column_major_slice_mut(b, n, 1));
    }

    pub fn solve_transpose_in_place(&self, b: &mut [f64]) {
        assert_eq!(b.len(), self.n);
        let n = self.n;
        self.lu.solve_transpose_in_place(MatMut::from_column_major_slice_mut(b, n, 1));
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let mut x = b.to_vec();
        self.solve_in_place(&mut x);
        x
    }

    /// Solves with a complex right-hand side by treating real and imaginary parts separately.
    pub fn solve_complex(&self, b: &[Complex64]) -> Vec<Complex64> {
        let (mut re, mut im) = super::vector::split_complex(b);
        self.solve_in_place(&mut re);
        self.solve_in_place(&mut im);
        super::vector::join_complex(&re, &im)
    }

    /// Hager's estimator for `||A^{-1}||_1` with Higham's alternative test vector.
    fn inverse_norm1_estimate(&self) -> f64 {
        let n = self.n;
        let norm1 = |v: &[f64]| v.iter().map(|x| x.abs()).sum::<f64>();
        let mut x = vec![1.0 / n as f64; n];
        let mut est = 0.0;
        let mut last_j = usize::MAX;
        for _ in 0..5 {
            let mut y = x.clone();
            self.solve_in_place(&mut y);
            if y.iter().any(|v| !v.is_finite()) {
                return f64::INFINITY;
            }
            est = norm1(&y);
            let mut z: Vec<f64> = y.iter().map(|v| if *v >= 0.0 { 1.0 } else { -1.0 }).collect();
            self.solve_transpose_in_place(&mut z);
            let (j, zmax) = z
                .iter()
                .enumerate()
                .fold((0, -1.0), |b, (i, v)| if v.abs() > b.1 { (i, v.abs()) } else { b });
            let ztx: f64 = z.iter().zip(&x).map(|(a, b)| a * b).sum();
            if zmax <= ztx || j == last_j {
                break;
            }
            last_j = j;
            x.iter_mut().for_each(|v| *v = 0.0);
            x[j] = 1.0;
        }
        let mut alt: Vec<f64> = (0..n)
            .map(|i| {
                let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
                sign * (1.0 + i as f64 / (n.max(2) - 1) as f64)
            })
            .collect();
        self.solve_in_place(&mut alt);
        let alt_est = 2.0 * norm1(&alt) / (3.0 * n as f64);
        if !alt_est.is_finite() {
            return f64::INFINITY;
        }
        est.max(alt_est)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    #[test]
    fn identity_factors_trivially() {
        let lu = SparseLu::factorize(&SparseMatrix::identity(5)).unwrap();
        let b = [1.0, 2.0, 3.0, 4.0, 5.0];
        assert_eq!(lu.solve(&b), b.to_vec());
        assert!((lu.condition_estimate() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn random_diagonally_dominant_residual() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let n = 200;
        let mut entries = Vec::new();
        for i in 0..n {
            let mut rowsum = 0.0;
            for _ in 0..4 {
                let j = rng.random_range(0..n);
                if j != i {
                    let v: f64 = rng.random_range(-1.0..1.0);
                    rowsum += v.abs();
                    entries.push((i, j, v));
                }
            }
            entries.push((i, i, rowsum + 1.0));
        }
        let a = SparseMatrix::from_triplets(n, n, entries);
        let lu = SparseLu::factorize(&a).unwrap();
        let x_true: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let b = a.matvec(&x_true);
        let x = lu.solve(&b);
        let r: Vec<f64> = a.matvec(&x).iter().zip(&b).map(|(p, q)| p - q).collect();
        let rel = crate::linalg::norm2(&r) / crate::linalg::norm2(&b);
        assert!(rel <= 1e-10, "{rel}");
        let mut bt = b.clone();
        lu.solve_transpose_in_place(&mut bt);
        let back = a.matvec_transpose(&bt);
        for (p, q) in back.iter().zip(&b) {
            assert!((p - q).abs() < 1e-10);
        }
    }

    #[test]
    fn zero_row_is_singular() {
        let a = SparseMatrix::from_triplets(3, 3, vec![(0, 0, 1.0), (2, 2, 1.0), (0, 1, 1.0)]);
        assert_eq!(SparseLu::factorize(&a).unwrap_err(), LuError::EmptyRow(1));
    }

    #[test]
    fn rank_deficient_matrix_is_singular() {
        let a = SparseMatrix::from_triplets(
            3,
            3,
            vec![
                (0, 0, 1.0),
                (0, 1, 2.0),
                (1, 0, 2.0),
                (1, 1, 4.0),
                (2, 2, 1.0),
            ],
        );
        let err = SparseLu::factorize(&a).unwrap_err();
        assert!(
            matches!(err, LuError::NumericallySingular(_) | LuError::StructurallySingular(_)),
            "{err:?}"
        );
    }
}
