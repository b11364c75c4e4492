use std::path::PathBuf;

use naap_core::dataset::DatasetError;
use naap_core::metrics::MetricsError;
use naap_core::regressors::RegressorError;
use thiserror::Error;

/// Process exit status for each error class.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExitCode {
    Success = 0,
    Usage = 1,
    Data = 2,
    Internal = 3,
}

/// Problems with input files: unreadable, malformed or inconsistent data.
#[derive(Debug, Error)]
pub enum DataError {
    #[error("{path}: {source}")]
    Read {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Csv { path: PathBuf, source: csv::Error },
    #[error("{path}: missing column(s) {}{}", .columns.join(", "), .hint.map(|h| format!("; {h}")).unwrap_or_default())]
    MissingColumns {
        path: PathBuf,
        columns: Vec<String>,
        hint: Option<&'static str>,
    },
    #[error("{path}: row {row}, column `{column}`: {message}")]
    Cell {
        path: PathBuf,
        row: usize,
        column: String,
        message: String,
    },
    #[error("{path}: line {line}{}: {message}", .id.as_ref().map(|i| format!(" ({i})")).unwrap_or_default())]
    Scheme {
        path: PathBuf,
        line: usize,
        id: Option<String>,
        message: String,
    },
    #[error("{path}: {message}")]
    Invalid { path: PathBuf, message: String },
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error(transparent)]
    Regressor(#[from] RegressorError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Data(#[from] DataError),
    #[error("writing {path}: {source}")]
    Write {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{0}")]
    Internal(String),
}

impl Error {
    pub fn exit_code(&self) -> ExitCode {
        match self {
            Self::Usage(_) => ExitCode::Usage,
            Self::Data(_) => ExitCode::Data,
            Self::Write { .. } | Self::Internal(_) => ExitCode::Internal,
        }
    }
}

impl From<DatasetError> for Error {
    fn from(e: DatasetError) -> Self {
        Self::Data(e.into())
    }
}

impl From<RegressorError> for Error {
    fn from(e: RegressorError) -> Self {
        Self::Data(e.into())
    }
}

impl From<MetricsError> for Error {
    fn from(e: MetricsError) -> Self {
        Self::Data(e.into())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
