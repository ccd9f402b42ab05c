use std::path::PathBuf;

use thiserror::Error;

/// Errors raised anywhere in the pipeline.
///
/// The CLI maps each variant onto a process exit code through [`Error::exit_code`].
#[derive(Debug, Error)]
pub enum Error {
    #[error("shape error: {0}")]
    Shape(String),

    #[error("numeric failure in {op}{}", epoch.map(|e| format!(" (epoch {e})")).unwrap_or_default())]
    Numeric { op: String, epoch: Option<usize> },

    #[error("data error: {0}")]
    Data(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub fn numeric(op: impl Into<String>) -> Self {
        Error::Numeric {
            op: op.into(),
            epoch: None,
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Attach a training epoch to a numeric failure. Other variants pass through.
    pub fn at_epoch(self, epoch: usize) -> Self {
        match self {
            Error::Numeric { op, .. } => Error::Numeric {
                op,
                epoch: Some(epoch),
            },
            other => other,
        }
    }

    /// 1 usage/config, 2 data (including I/O and shape), 3 numeric failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) => 1,
            Error::Shape(_) | Error::Data(_) | Error::Io { .. } | Error::Json(_) => 2,
            Error::Numeric { .. } => 3,
        }
    }
}
