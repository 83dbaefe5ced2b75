use std::path::PathBuf;

/// Errors produced by the SPCAFS library.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid dimension: {0}")]
    InvalidDimension(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid data: {0}")]
    InvalidData(String),

    /// A cell of a CSV file could not be interpreted. `row` and `column` are 1-based.
    #[error("{path}: row {row}, column {column}: {message}")]
    Parse {
        path: String,
        row: u64,
        column: usize,
        message: String,
    },

    #[error("numeric failure at iteration {iteration}: {message}")]
    Numeric { iteration: usize, message: String },

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    /// Broad category of the failure, used to pick process exit codes.
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::InvalidDimension(_) | Error::InvalidParameter(_) => ErrorKind::Config,
            Error::InvalidData(_) | Error::Parse { .. } | Error::Io { .. } => ErrorKind::Data,
            Error::Numeric { .. } => ErrorKind::Numeric,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Config,
    Data,
    Numeric,
}

pub type Result<T> = std::result::Result<T, Error>;
