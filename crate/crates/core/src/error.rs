use std::io;

use thiserror::Error;

/// Errors raised across the simulation crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("distribution is empty")]
    EmptyDistribution,

    #[error("probability {0} is outside [0, 1]")]
    InvalidProbability(f64),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("malformed distribution file: {0}")]
    Format(String),

    #[error("distribution file truncated: expected {expected} bytes of payload, found {found}")]
    Truncated { expected: u64, found: u64 },

    #[error("distribution values not strictly increasing at run {index}")]
    Unsorted { index: usize },

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
