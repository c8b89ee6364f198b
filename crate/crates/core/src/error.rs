use thiserror::Error;

use crate::body::ValidationFailure;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A radial evaluation produced a non-finite or non-positive value.
    #[error("invalid body ({variant}): {detail}")]
    InvalidBody { variant: &'static str, detail: String },

    #[error("invalid direction: {0}")]
    InvalidDirection(String),

    #[error("invalid phase: {0}")]
    InvalidPhase(String),

    #[error("invalid quadrature spec: {0}")]
    InvalidSpec(String),

    #[error("non-finite value {value} at index {index}")]
    NonFinite { index: usize, value: f64 },

    #[error("cannot estimate the mean of an empty sequence")]
    EmptyInput,

    #[error("parse error at {path}: {message}")]
    Parse { path: String, message: String },

    /// A well-formed body spec with an out-of-domain value.
    #[error("invalid value at {path}: {source}")]
    InvalidField { path: String, source: Box<Error> },

    #[error("body validation failed: {0}")]
    Validation(ValidationFailure),

    #[error("oracle failure: {0}")]
    Oracle(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("unsupported: {0}")]
    Unsupported(String),
}

impl Error {
    /// Subsystem that raised the error, for CLI diagnostics.
    pub fn module(&self) -> &'static str {
        match self {
            Error::InvalidBody { .. }
            | Error::InvalidDirection(_)
            | Error::InvalidPhase(_)
            | Error::InvalidField { .. }
            | Error::Validation(_) => "body",
            Error::InvalidSpec(_) | Error::NonFinite { .. } | Error::EmptyInput => "sampling",
            Error::Parse { .. } | Error::Unsupported(_) => "report",
            Error::Oracle(_) => "oracle",
            Error::Precondition(_) => "input",
        }
    }
}
