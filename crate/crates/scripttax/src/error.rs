//! Crate-wide error type with CLI exit-code mapping.

use std::io;

pub type Result<T> = std::result::Result<T, Error>;

/// Errors produced anywhere in the toolkit.
///
/// Exit-code contract for the CLI: parse and validation failures map to 1,
/// I/O failures to 2, internal invariant violations to 3.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Malformed input file (wrong column count, bad merge rule, unparsable
    /// record). Carries the offending location where one is known.
    #[error("parse error: {0}")]
    Parse(String),

    /// Structurally parsable input that violates a domain invariant
    /// (duplicate id, empty sentence side, unknown sentence id, ...).
    #[error("validation error: {0}")]
    Validation(String),

    #[error("i/o error: {0}")]
    Io(#[from] io::Error),

    /// A should-never-happen condition: an emitted artifact failed its own
    /// consistency re-check.
    #[error("internal invariant violation: {0}")]
    Internal(String),
}

impl Error {
    pub fn parse(msg: impl Into<String>) -> Self {
        Error::Parse(msg.into())
    }

    pub fn validation(msg: impl Into<String>) -> Self {
        Error::Validation(msg.into())
    }

    pub fn internal(msg: impl Into<String>) -> Self {
        Error::Internal(msg.into())
    }

    /// Process exit code for the CLI.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Parse(_) | Error::Validation(_) => 1,
            Error::Io(_) => 2,
            Error::Internal(_) => 3,
        }
    }
}
