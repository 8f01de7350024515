use thiserror::Error;

/// Errors raised by the spectral toolkit and the experiments built on it.
#[derive(Debug, Error)]
pub enum Error {
    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("field is not Hermitian-symmetric (relative defect {defect:.3e})")]
    SymmetryViolation { defect: f64 },

    #[error("parameter error: {0}")]
    Parameter(String),

    #[error("index out of range: {0}")]
    OutOfRange(String),

    #[error("cutoff construction failed: {0}")]
    Cutoff(String),

    #[error("degenerate ratio: numerator {numerator:.3e} with zero denominator")]
    DegenerateRatio { numerator: f64 },

    #[error("CFL violation: dt * max|u| * N = {value:.3e} exceeds {limit}")]
    Cfl { value: f64, limit: f64 },

    #[error("blow-up at t = {time}: {reason}")]
    BlowUp { time: f64, reason: String },

    #[error("quadrature did not converge on [{lo:.3e}, {hi:.3e}]: estimated error {error:.3e}")]
    Quadrature { lo: f64, hi: f64, error: f64 },

    #[error("inconsistent sampling: {0}")]
    Sampling(String),

    #[error("insufficient band-limiting: {0}")]
    BandLimit(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("checkpoint format error: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
