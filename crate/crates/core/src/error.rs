use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("no grid node lies strictly inside the shape")]
    EmptyInterior,

    #[error("invalid shape: {0}")]
    InvalidShape(String),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("lambda must be positive, got {0}")]
    InvalidLambda(f64),

    #[error("right-hand side must be strictly positive on interior nodes (min = {0})")]
    NonPositiveRhs(f64),

    #[error("field does not live on this domain")]
    DomainMismatch,

    #[error("could not bracket the extinction threshold: {0}")]
    BracketInvalid(String),

    #[error("no shooting root for load {0}")]
    NoRoot(f64),

    #[error("iteration budget exhausted after {0} iterations")]
    MaxIter(usize),

    #[error("floating-point range exceeded: {0}")]
    Overflow(String),

    #[error("linear solve failed: {0}")]
    Linear(String),

    #[error("config error in `{key}`: {reason}\n  example: {example}")]
    Config {
        key: String,
        reason: String,
        example: String,
    },

    #[error("parse error: {0}")]
    Parse(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
