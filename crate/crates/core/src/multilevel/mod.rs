//! Nested level hierarchies, the multi-level eigenvalue scheme and convergence reporting.

pub mod algorithm;
pub mod convergence;
pub mod hierarchy;

use thiserror::Error;

use crate::assembly::AssemblyError;
use crate::eigen::EigenError;
use crate::fespace::FeError;
use crate::linalg::{DenseError, LuError};

pub use algorithm::{algorithm1, enrichment_step, EnrichedSolve, LevelRecord, MultilevelResult};
pub use convergence::{
    align_eigenfunction, convergence_report, eigenvalue_orders, error_orders, match_levels, ConvergenceReport,
    EigenSequence,
};
pub use hierarchy::{build_hierarchy, single_level_solve, Level, LevelHierarchy};

#[derive(Debug, Error)]
pub enum MultilevelError {
    #[error("invalid initial mesh: {0}")]
    InvalidMesh(String),
    #[error("level {0} does not exist (hierarchy has {1} levels)")]
    BadLevel(usize, usize),
    #[error("coarse eigensolve failed: {0}")]
    CoarseSolve(EigenError),
    #[error(transparent)]
    Fe(#[from] FeError),
    #[error(transparent)]
    Assembly(#[from] AssemblyError),
    #[error(transparent)]
    Eigen(#[from] EigenError),
    #[error(transparent)]
    Lu(#[from] LuError),
    #[error(transparent)]
    Dense(#[from] DenseError),
}
