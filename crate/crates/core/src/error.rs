use thiserror::Error;

/// Errors raised by grid construction, estimators, solvers and the harness.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("non-finite value at flat index {0}")]
    NonFinite(usize),
    #[error("ellipticity violated: {0}")]
    Ellipticity(String),
    #[error("solver stopped after {iterations} iterations with relative residual {residual:e}")]
    NoConvergence { iterations: usize, residual: f64 },
    #[error("pair budget exceeded: {0}")]
    Budget(String),
    #[error("underdetermined fit: {0}")]
    Underdetermined(String),
    #[error("invalid config: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
