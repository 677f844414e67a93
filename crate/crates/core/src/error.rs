use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// A distribution or formula received an argument outside its domain.
    #[error("parameter out of domain: {0}")]
    Parameter(String),

    #[error("geometry error: {0}")]
    Geometry(String),

    #[error("unknown material `{0}`")]
    UnknownMaterial(String),

    /// A document or configuration value failed validation.
    #[error("invalid `{field}`: {reason}")]
    Validation { field: String, reason: String },

    #[error("resource limit exceeded: {0}")]
    Resource(String),

    /// An empty or otherwise unusable data set reached a statistic.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("{path}: line {line}: {reason}")]
    Parse {
        path: String,
        line: u64,
        reason: String,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn validation(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Validation {
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
