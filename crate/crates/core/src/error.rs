use std::path::PathBuf;

use thiserror::Error;

use crate::corpus::RowError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// Bad column mapping, config file, or feature-group layout.
    #[error("configuration error: {0}")]
    Config(String),

    /// A caller broke an operation's precondition (empty input, bad fraction, ...).
    #[error("usage error: {0}")]
    Usage(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: malformed CSV: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("{path}: {invalid} of {total} rows invalid (limit 1%); first: {first}")]
    TooManyInvalidRows {
        path: PathBuf,
        invalid: usize,
        total: usize,
        first: String,
        rows: Vec<RowError>,
    },

    #[error("data error: {0}")]
    Data(String),

    #[error("degenerate statistic: {0}")]
    Degenerate(String),

    #[error("training error: {0}")]
    Training(String),

    #[error("output directory {0} is locked by another run")]
    Locked(PathBuf),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn csv(path: impl Into<PathBuf>, source: csv::Error) -> Self {
        Error::Csv {
            path: path.into(),
            source,
        }
    }

    /// Short machine-readable tag used in CLI error payloads.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Config(_) => "config",
            Error::Usage(_) => "usage",
            Error::Io { .. } => "io",
            Error::Csv { .. } | Error::Parse { .. } | Error::TooManyInvalidRows { .. } => "data",
            Error::Data(_) => "data",
            Error::Degenerate(_) => "degenerate",
            Error::Training(_) => "training",
            Error::Json(_) => "config",
            Error::Locked(_) => "locked",
        }
    }

    /// Process exit code for the `c3` binary. Zero is never returned.
    pub fn exit_code(&self) -> i32 {
        match self.kind() {
            "config" | "usage" => 2,
            "io" | "data" => 3,
            "degenerate" => 4,
            "training" => 5,
            "locked" => 6,
            _ => 1,
        }
    }
}
