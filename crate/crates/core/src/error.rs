use thiserror::Error;

/// Errors raised by mesh construction, assembly and the solvers.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("non-matching interface: {0}")]
    NonMatchingInterface(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("singular pivot at row {row}")]
    SingularPivot { row: usize },

    #[error("factorization failed: {0}")]
    Factorization(String),

    #[error("conductivity tensor is not symmetric positive definite at ({x}, {y})")]
    NotSpd { x: f64, y: f64 },

    #[error("no data for sample {0}")]
    MissingSample(usize),

    #[error("empty ensemble")]
    EmptyEnsemble,
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
