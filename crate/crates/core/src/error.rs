use std::path::PathBuf;

use thiserror::Error;

/// Everything that can go wrong while building or evaluating a scenario.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid config field `{field}`: {reason}")]
    Config { field: &'static str, reason: String },

    #[error("invalid swap {swap}: {reason}")]
    InvalidSwap { swap: String, reason: String },

    #[error("subchannel {sub} is not assigned to user {user}")]
    NotMatched { sub: usize, user: usize },

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("instance too large for exhaustive enumeration: {cells} user-subchannel cells (limit {limit})")]
    TooLarge { cells: usize, limit: usize },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Parse {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
}

impl Error {
    pub(crate) fn config(field: &'static str, reason: impl Into<String>) -> Self {
        Error::Config {
            field,
            reason: reason.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
