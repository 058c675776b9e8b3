use thiserror::Error;

/// Failures raised by the numerical kernels and the simulation drivers.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: {context} (expected {expected}, got {got})")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("matrix is singular to working precision (pivot {pivot})")]
    Singular { pivot: usize },
    #[error("matrix is not positive definite (failed at row {row})")]
    NotPositiveDefinite { row: usize },
    #[error("index {index} out of range for dimension {len}")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("duplicate index {index} in index set")]
    DuplicateIndex { index: usize },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("eigensolver failed to converge ({0})")]
    EigenNoConvergence(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
