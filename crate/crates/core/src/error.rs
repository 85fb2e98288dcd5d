use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("empty candidate set")]
    EmptyCandidates,

    #[error("alignment error for column `{column}`: {reason}")]
    Alignment { column: String, reason: String },

    #[error("split error: {0}")]
    Split(String),

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("invalid data: {0}")]
    InvalidData(String),

    #[error("correlation undefined for `{0}`: zero variance")]
    UndefinedCorrelation(String),

    #[error("metric undefined: {0}")]
    UndefinedMetric(String),

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("feature unavailable: {0}")]
    Unavailable(String),

    #[error("training failed: {0}")]
    Training(String),

    #[error("prediction schema mismatch: {0}")]
    Schema(String),

    #[error("catalog error: {0}")]
    Catalog(String),

    #[error("unknown feature `{0}`")]
    UnknownFeature(String),

    #[error("{}:{line}: {message}", path.display())]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("{}: {message}", path.display())]
    File { path: PathBuf, message: String },

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for errors caused by bad user input rather than a failed computation.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::Parameter(_)
                | Error::Config(_)
                | Error::Catalog(_)
                | Error::UnknownFeature(_)
                | Error::Parse { .. }
        )
    }
}
