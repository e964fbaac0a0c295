//! Mixed finite elements for Helmholtz transmission eigenvalues in two dimensions.

pub mod assembly;
pub mod coefficient;
pub mod config;
pub mod eigen;
pub mod fespace;
pub mod infsup;
pub mod linalg;
pub mod mesh;
pub mod multilevel;
pub mod quadrature;
pub mod run;
