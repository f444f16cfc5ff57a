use thiserror::Error;

/// Errors raised by the numerical kernels.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("symbol is not finite at grid node {index}")]
    NonFiniteSymbol { index: usize },
    #[error("grid mismatch between fields")]
    GridMismatch,
    #[error("numerical guard tripped: {0}")]
    NumericalGuard(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// True for failures of a run-time guard rather than bad input.
    pub fn is_numerical_guard(&self) -> bool {
        matches!(self, Error::NumericalGuard(_))
    }
}
