use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    Input(String),

    #[error("structural mismatch: {0}")]
    Structure(String),

    #[error("unsupported configuration: {0}")]
    Unsupported(String),

    #[error("capacity exceeded: {0}")]
    Capacity(String),

    #[error("parse error at row {row}, column `{column}`: {message}")]
    Parse {
        row: usize,
        column: String,
        message: String,
    },

    #[error("malformed document at `{path}`: {message}")]
    Document { path: String, message: String },

    #[error("download of {url} failed: {message}")]
    Fetch { url: String, message: String },

    #[error("checksum mismatch for {path}: expected {expected}, found {found}")]
    Checksum {
        path: String,
        expected: String,
        found: String,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn input(msg: impl Into<String>) -> Self {
        Error::Input(msg.into())
    }

    pub(crate) fn structure(msg: impl Into<String>) -> Self {
        Error::Structure(msg.into())
    }

    /// True for errors caused by the environment (files, network) rather than
    /// by the request itself.
    pub fn is_io(&self) -> bool {
        matches!(
            self,
            Error::Io(_) | Error::Fetch { .. } | Error::Checksum { .. }
        ) || matches!(self, Error::Csv(e) if e.is_io_error())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
