use thiserror::Error;

/// Errors raised by the core numerical routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("non-finite value at index {0}")]
    NonFinite(usize),

    #[error("degenerate range in {0} quadrature: trace does not cover a phase rotation")]
    DegenerateRange(&'static str),

    #[error("numerical domain error: {0}")]
    NumericalDomain(String),

    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),

    #[error("Fock cutoff too small: truncated norm {norm:.3e} short of 1, need dim >= {required}")]
    InsufficientDimension { norm: f64, required: usize },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidInput(msg.into())
}
