//! Sparse and dense linear algebra kernels.

pub mod cholesky;
pub mod dense;
pub mod gmres;
pub mod sparse;

pub use cholesky::SparseCholesky;
pub use gmres::{gmres, GmresConfig, GmresOutcome};
pub use sparse::CsrMatrix;
