use thiserror::Error;

use crate::openalex::FetchError;
use crate::store::StoreError;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    Validation(String),
    #[error("invalid argument: {0}")]
    Argument(String),
    #[error("data integrity: {0}")]
    DataIntegrity(String),
    #[error("distance undefined for {x}/{y}: both work sets are empty")]
    UndefinedDistance { x: String, y: String },
    #[error(transparent)]
    Fetch(#[from] FetchError),
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Process exit code for the `atlas` binary.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Validation(_) | Error::Argument(_) => 2,
            Error::Fetch(_) => 3,
            Error::DataIntegrity(_) | Error::UndefinedDistance { .. } | Error::Numerical(_) => 4,
            Error::Store(e) if e.is_integrity() => 4,
            Error::Store(_) => 2,
            Error::Io(_) | Error::Json(_) | Error::Csv(_) => 1,
        }
    }
}
