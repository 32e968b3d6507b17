use std::path::PathBuf;

use thiserror::Error;

/// Errors produced anywhere in the lifting pipeline.
#[derive(Debug, Error)]
pub enum Error {
    /// Array shapes or joint counts that do not fit together.
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    /// A configuration value outside its allowed range.
    #[error("invalid parameter: {0}")]
    Parameter(String),

    /// A malformed text file; `line` is 1-based.
    #[error("{path}:{line}: {msg}")]
    Parse {
        path: String,
        line: usize,
        msg: String,
    },

    /// NaN/inf or a degenerate numerical configuration.
    #[error("numeric failure: {0}")]
    Numeric(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn dim(msg: impl Into<String>) -> Self {
        Error::Dimension(msg.into())
    }

    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::Parameter(msg.into())
    }

    pub(crate) fn numeric(msg: impl Into<String>) -> Self {
        Error::Numeric(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
