use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Grid or mode-set configuration that cannot represent the request.
    #[error("configuration error: {0}")]
    Config(String),
    /// Operation applied outside its mathematical domain.
    #[error("domain error: {0}")]
    Domain(String),
    /// Caller-supplied input violates a documented precondition.
    #[error("precondition failed: {0}")]
    Precondition(String),
    /// Integrand scale too large for direct evaluation in f64.
    #[error("overflow guard: {0}")]
    Overflow(String),
    #[error("internal error: {0}")]
    Internal(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
