use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// A spec, config or parameter array is inconsistent with what an operation needs.
    #[error("configuration error: {0}")]
    Config(String),

    /// Caller-supplied data has the wrong shape or lies outside the accepted domain.
    #[error("input error: {0}")]
    Input(String),

    /// A file does not follow its container layout.
    #[error("format error in {field}: {reason}")]
    Format { field: String, reason: String },

    /// An API was used out of order (e.g. backward without a recorded forward pass).
    #[error("usage error: {0}")]
    Usage(String),

    #[error("numerical failure at epoch {epoch}, batch {batch}: {reason}")]
    Numerical {
        epoch: usize,
        batch: usize,
        reason: String,
    },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub(crate) fn input(msg: impl Into<String>) -> Self {
        Error::Input(msg.into())
    }

    pub(crate) fn format(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Format {
            field: field.into(),
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
