use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("column `{0}` not found in header")]
    MissingColumn(String),

    #[error("line {line}: {msg}")]
    MalformedRow { line: u64, msg: String },

    #[error("line {line}: non-positive price {price}")]
    NonPositivePrice { line: u64, price: f64 },

    #[error("need at least {needed} observations, got {got}")]
    TooFewObservations { needed: usize, got: usize },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("series has zero variance")]
    ZeroVariance,

    #[error("tail window of size {m} contains a value of the wrong sign")]
    WrongSignInTailWindow { m: usize },

    #[error("threshold count {m} exceeds the {available} available tail observations")]
    InsufficientTail { m: usize, available: usize },

    #[error("tail estimate is invalid: {0}")]
    InvalidTailEstimate(String),

    #[error("probability {p} is inside the threshold (p must be <= m/n = {boundary})")]
    InteriorQuantile { p: f64, boundary: f64 },

    #[error("parameters violate model constraints: {0}")]
    InvalidParams(String),

    #[error("non-finite value encountered: {0}")]
    NonFinite(String),

    #[error("optimizer did not converge after {iterations} iterations")]
    NoConvergence { iterations: usize },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("{failed} of {reps} replications failed")]
    TooManyFailures { failed: usize, reps: usize },
}
