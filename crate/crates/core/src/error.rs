use std::io;

use thiserror::Error;

/// Errors raised across the analysis pipeline.
///
/// Each variant corresponds to one failure class; [`GeomError::kind`] returns the
/// stable name printed by the command-line front end.
#[derive(Debug, Error)]
pub enum GeomError {
    #[error("malformed input: {0}")]
    Format(String),
    #[error("inconsistent input: {0}")]
    Consistency(String),
    #[error("invalid data: {0}")]
    Data(String),
    #[error("degenerate input: {0}")]
    DegenerateInput(String),
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("i/o failure on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: io::Error,
    },
}

impl GeomError {
    pub fn kind(&self) -> &'static str {
        match self {
            GeomError::Format(_) => "FormatError",
            GeomError::Consistency(_) => "ConsistencyError",
            GeomError::Data(_) => "DataError",
            GeomError::DegenerateInput(_) => "DegenerateInput",
            GeomError::InsufficientData(_) => "InsufficientData",
            GeomError::Io { .. } => "IoError",
        }
    }

    pub fn io(path: impl AsRef<std::path::Path>, source: io::Error) -> Self {
        GeomError::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, GeomError>;
