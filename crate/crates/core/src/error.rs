use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// Malformed input row: wrong arity, non-integer field, bad header.
    #[error("line {line}: {message}")]
    Parse { line: u64, message: String },

    /// Well-formed input that violates a data invariant.
    #[error("line {line}: {message}")]
    Validation { line: u64, message: String },

    #[error("invalid argument: {0}")]
    Argument(String),

    /// A caller broke an operation's precondition.
    #[error("contract violation: {0}")]
    Contract(String),

    #[error("infeasible target: {target} clusters need at least {needed} points, got {available}")]
    InfeasibleTarget {
        target: usize,
        needed: usize,
        available: usize,
    },

    /// Inconsistent run configuration.
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn parse(line: u64, message: impl Into<String>) -> Self {
        Error::Parse {
            line,
            message: message.into(),
        }
    }

    pub(crate) fn validation(line: u64, message: impl Into<String>) -> Self {
        Error::Validation {
            line,
            message: message.into(),
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for errors caused by how the run was configured rather than by
    /// the data it was pointed at.
    pub fn is_config(&self) -> bool {
        matches!(self, Error::Config(_))
    }
}
