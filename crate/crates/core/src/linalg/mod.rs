//! Real sparse and dense linear algebra.

pub mod dense;
pub mod lu;
pub mod sparse;
pub mod vector;

pub use dense::{dense_eig, DenseEigenPair, DenseError, DenseLu, DenseMatrix};
pub use lu::{LuError, SparseLu};
pub use sparse::{SparseMatrix, TripletBuilder};
pub use vector::{axpy, caxpy, cdot, cnorm2, dot, mgs_orthogonalize, mgs_orthonormalize, norm2, scale};
