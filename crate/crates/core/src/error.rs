use std::path::PathBuf;

use thiserror::Error;

/// Errors raised anywhere in the finite-element / solver stack.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("{path}:{line}: {msg}")]
    Parse {
        path: PathBuf,
        line: usize,
        msg: String,
    },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("invalid mesh: {0}")]
    InvalidMesh(String),

    #[error("singular viscosity: epsilon = 0 and zero strain rate")]
    SingularViscosity,

    #[error("singular point: {0}")]
    SingularPoint(String),

    #[error("geometry error: {0}")]
    Geometry(String),

    #[error("matrix is not positive definite (pivot {pivot} at row {row})")]
    NotPositiveDefinite { row: usize, pivot: f64 },

    #[error("dense size cap exceeded: {size} > {cap}")]
    DenseCapExceeded { size: usize, cap: usize },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("linear solver breakdown: {0}")]
    LinearSolver(String),
}

pub type Result<T> = std::result::Result<T, Error>;
