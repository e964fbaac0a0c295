//! Continuous Lagrange finite element spaces, the mixed product space and inter-level prolongation.

pub mod basis;
pub mod norms;
pub mod product;
pub mod prolongation;
pub mod space;

use thiserror::Error;

pub use basis::{CellGeometry, NodeKind, ReferenceElement};
pub use norms::{component_norms, gram_matrix, ComponentGrams, ComponentNorm, GramKind};
pub use product::{Field, ProductDegrees, ProductSpace};
pub use prolongation::{prolongate, prolongate_scalar};
pub use space::{expected_dof_count, Constraint, LagrangeSpace};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FeError {
    #[error("unsupported Lagrange degree {0} (expected 1, 2 or 3)")]
    UnsupportedDegree(usize),
    #[error("unsupported product-space degree {0} (m must be 2 or 3; sigma and p degrees m-1 or m)")]
    UnsupportedProductDegree(usize),
    #[error("spaces are not nested: {0}")]
    NotNested(String),
}
