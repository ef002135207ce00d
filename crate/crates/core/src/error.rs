use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("validation error: {0}")]
    Validation(String),
    #[error("resource ceiling exceeded: {what} needs {needed}, limit {limit}")]
    Resource {
        what: &'static str,
        needed: usize,
        limit: usize,
    },
    #[error("stationary space has dimension {dim}, expected 1")]
    Uniqueness { dim: usize },
    #[error("numerical conditioning: {0}")]
    Conditioning(String),
    #[error("divergent series: {0}")]
    Divergence(String),
    #[error("infeasible: {0}")]
    Infeasible(String),
    #[error("threshold {target} not reached before t = {t_max}")]
    Horizon { target: f64, t_max: f64 },
    #[error("spectrum has no non-zero eigenvalue")]
    DegenerateSpectrum,
    #[error("decode error: {0}")]
    Decode(String),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
}
