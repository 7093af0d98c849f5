use thiserror::Error;

/// Errors produced by the shaping library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("infeasible point: {0}")]
    Feasibility(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("labeling error: {0}")]
    Labeling(String),

    #[error("target rate {target} bpcu is unreachable (asymptotic rate {limit} bpcu)")]
    UnreachableRate { target: f64, limit: f64 },

    #[error("inverse rate did not verify: rate {rate} at {snr_db} dB, target {target}")]
    InverseMismatch { snr_db: f64, rate: f64, target: f64 },

    #[error("value out of range: {0}")]
    Range(String),

    #[error("no convergence: {0}")]
    Convergence(String),

    #[error("distribution is not symmetric: {0}")]
    Symmetry(String),

    #[error("infeasible spectral efficiency: {0}")]
    InfeasibleSe(String),

    #[error("encoding error: {0}")]
    Encoding(String),

    #[error("decoding error: {0}")]
    Decoding(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
