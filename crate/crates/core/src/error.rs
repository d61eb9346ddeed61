use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("missing required column `{0}`")]
    MissingColumn(String),

    #[error("no rows retained after validation ({excluded} excluded)")]
    EmptyDataset { excluded: usize },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("non-finite value in block `{block}`")]
    NumericOverflow { block: &'static str },

    #[error("step-size adaptation failed in chain {chain}: step size {step_size:e}")]
    AdaptationFailure { chain: usize, step_size: f64 },

    #[error("integrity check failed: {0}")]
    Integrity(String),

    #[error("undefined statistic: {0}")]
    Undefined(String),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for errors caused by bad input or a violated usage contract, as
    /// opposed to failures at run time.
    pub fn is_usage(&self) -> bool {
        matches!(
            self,
            Error::MissingColumn(_)
                | Error::EmptyDataset { .. }
                | Error::Config(_)
                | Error::Precondition(_)
        )
    }
}
