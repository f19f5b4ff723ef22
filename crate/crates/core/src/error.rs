use std::io;

use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A malformed line in a point-cloud or distribution file. `line` is 1-based.
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },

    /// A function was evaluated where it is undefined or unbounded.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("training diverged at iteration {iter}: {reason}")]
    Diverged { iter: usize, reason: String },

    #[error(transparent)]
    Io(#[from] io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
