//! Crate-wide error type.

use std::path::PathBuf;

/// Errors surfaced by simulator operations.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Invalid configuration (unknown condition id, bad override, invalid field).
    #[error("configuration error: {0}")]
    Config(String),

    /// A caller violated an operation's contract (time regression, bad argument).
    #[error("contract violation: {0}")]
    Contract(String),

    /// Training was requested on an empty record set.
    #[error("model unavailable: no records to train on")]
    ModelUnavailable,

    /// Report generation found no completed runs.
    #[error("no completed runs found under {0}")]
    EmptyReport(PathBuf),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },

    #[error("serialization error: {0}")]
    Serialize(String),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
