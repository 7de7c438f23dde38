//! Crate-wide error type.

#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A parameter is out of its documented range.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// Vector / multi-index / ambient dimensions disagree.
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    /// A solver failed to certify a result (non-finite data, iteration
    /// cap, inconsistent primal/dual values).
    #[error("numerical failure: {0}")]
    Numerical(String),

    /// Set-description or fixture files that do not parse or validate.
    #[error("parse error: {0}")]
    Parse(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub fn dim(msg: impl Into<String>) -> Self {
        Error::DimensionMismatch(msg.into())
    }

    pub fn numerical(msg: impl Into<String>) -> Self {
        Error::Numerical(msg.into())
    }
}
