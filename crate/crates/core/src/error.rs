use thiserror::Error;

/// Errors raised by the tensor kernels and solvers.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid dimension: {0}")]
    InvalidDimension(String),
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("mode {mode} out of range for an order-{order} tensor (valid: 2..={order})")]
    ModeOutOfRange { mode: usize, order: usize },
    #[error("probe vector must be strictly positive")]
    NonpositiveProbe,
    #[error("zero diagonal entry at row {0}")]
    ZeroDiagonal(usize),
    #[error("zero pivot at row {0}")]
    ZeroPivot(usize),
    #[error("matrix is numerically singular")]
    SingularMatrix,
    #[error("no bracket found for a positive root")]
    NoBracketFound,
    #[error("root solve failed in row {row}")]
    RootSolveFailed { row: usize },
    #[error("invalid problem: {0}")]
    InvalidProblem(String),
    #[error("splitting is not regular: F has entry {value:e}")]
    NonregularSplitting { value: f64 },
    #[error("tensor is not symmetric (max permutation difference {max_diff:e})")]
    NotSymmetric { max_diff: f64 },
    #[error("preconditioner has a zero diagonal entry at row {0}")]
    SingularPreconditioner(usize),
    #[error("invalid solver configuration: {0}")]
    InvalidConfig(String),
    #[error("unknown method `{0}`")]
    UnknownMethod(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
