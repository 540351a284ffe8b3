use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: u64,
        message: String,
    },

    #[error("rating {rating} at line {line} is outside the scale [{min}, {max}]")]
    RatingOutOfScale {
        line: u64,
        rating: f64,
        min: f64,
        max: f64,
    },

    #[error("source and target domains share no users after filtering")]
    EmptyIntersection,

    #[error("non-finite loss at epoch {epoch}")]
    Diverged { epoch: usize },

    #[error("non-finite loss during gradient check")]
    NonFiniteLoss,

    #[error("config key `{key}`: {message}")]
    Config { key: String, message: String },

    #[error("evaluation leak: {0}")]
    Leak(String),

    #[error("checkpoint: {0}")]
    Checkpoint(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn dim(msg: impl Into<String>) -> Self {
        Error::Dimension(msg.into())
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn config(key: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            key: key.into(),
            message: message.into(),
        }
    }
}
