use std::path::PathBuf;

use thiserror::Error;

/// Errors raised anywhere in the retrieval pipeline.
///
/// Variants line up with the failure classes a caller has to tell apart:
/// bad input, a query that cannot be answered, and numerical breakdown.
#[derive(Debug, Error)]
pub enum Error {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("record {ordinal}: {message}")]
    Parse { ordinal: usize, message: String },

    #[error("{0}")]
    Validation(String),

    #[error("lookup failed: {0}")]
    Lookup(String),

    #[error("{0}")]
    Query(String),

    #[error("numeric failure at iteration {iteration}: {message}")]
    Numeric { iteration: usize, message: String },
}

impl Error {
    pub(crate) fn validation(msg: impl Into<String>) -> Self {
        Error::Validation(msg.into())
    }

    pub(crate) fn query(msg: impl Into<String>) -> Self {
        Error::Query(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code for command-line front ends.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Io { .. } | Error::Parse { .. } | Error::Validation(_) | Error::Lookup(_) => 2,
            Error::Query(_) => 3,
            Error::Numeric { .. } => 4,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
