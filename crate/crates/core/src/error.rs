use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("lattice: {0}")]
    Lattice(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("scenario path {path} day {day}: {source}")]
    Scenario {
        path: usize,
        day: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("{path}: {source}")]
    File {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    /// True for errors caused by bad user input rather than internal failure.
    pub fn is_validation(&self) -> bool {
        match self {
            Error::InvalidInput(_) | Error::Csv(_) | Error::Json(_) | Error::File { .. } => true,
            Error::Scenario { source, .. } => source.is_validation(),
            _ => false,
        }
    }
}

pub(crate) fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(Error::InvalidInput(msg()))
    }
}
