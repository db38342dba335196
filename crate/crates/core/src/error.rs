use std::io;

use thiserror::Error;

/// Errors produced by the transform, estimators, and dataset I/O.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("batch item {index}: {source}")]
    BatchItem {
        index: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("resource limit exceeded: {0}")]
    ResourceLimit(String),

    #[error("malformed input: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidArgument(msg.into()))
}

/// Fails unless `n` is a power of two (including `n == 1`).
pub(crate) fn require_pow2(n: usize) -> Result<()> {
    if n == 0 || !n.is_power_of_two() {
        return invalid(format!("length {n} is not a power of 2"));
    }
    Ok(())
}

pub(crate) fn require_len(expected: usize, actual: usize) -> Result<()> {
    if expected != actual {
        return Err(Error::DimensionMismatch { expected, actual });
    }
    Ok(())
}
