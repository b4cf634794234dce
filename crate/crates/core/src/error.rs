//! Error type shared across the crate.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// All particle weights collapsed to zero likelihood at one filter step.
    #[error("particle weights degenerated at step {step}")]
    Degeneracy { step: usize },

    #[error("numerical failure: {0}")]
    NumericalFailure(String),

    /// A covariance matrix violated the uncertainty principle beyond
    /// numerical tolerance.
    #[error("invalid physical state: {0}")]
    InvalidPhysicalState(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
