use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the domain of the model (non-positive
    /// distance, degenerate aperture, interferer at the receiver, ...).
    #[error("domain error: {0}")]
    Domain(String),

    /// Invalid experiment or estimator configuration.
    #[error("config error in `{field}`: {message}")]
    Config { field: String, message: String },

    #[error("cannot read {path}: {source}")]
    Read {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("cannot write {path}: {source}")]
    Write {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn config(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            message: message.into(),
        }
    }

    /// True for errors caused by the user's configuration rather than by the
    /// runtime environment.
    pub fn is_config(&self) -> bool {
        matches!(self, Error::Config { .. } | Error::Read { .. })
    }
}

pub type Result<T> = std::result::Result<T, Error>;
