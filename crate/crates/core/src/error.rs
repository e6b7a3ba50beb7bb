use std::io;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Inconsistent or invalid settings, including symbol table mismatches.
    #[error("configuration error: {0}")]
    Config(String),

    #[error("unsupported input: {0}")]
    UnsupportedInput(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("negative-weight cycle makes shortest distances diverge")]
    Divergence,

    #[error("cannot tokenize {word:?}: no wordpiece covers {ch:?} at char {position}")]
    Tokenize {
        word: String,
        ch: char,
        position: usize,
    },

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("missing bias FST for reachable class {0}")]
    MissingBias(String),

    #[error("undefined: {0}")]
    Undefined(String),

    #[error(transparent)]
    Io(#[from] io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn parse(line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            line,
            message: message.into(),
        }
    }
}
