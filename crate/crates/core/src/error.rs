use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("contract violated: {0}")]
    Contract(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("ellipticity violated: a11 = {value} < alpha0 = {floor} at t = {t}, x = {x}")]
    Ellipticity { value: f64, floor: f64, t: f64, x: f64 },

    #[error("no convergence within horizon {horizon}; last residual {}", residuals.last().copied().unwrap_or(f64::NAN))]
    Convergence { horizon: usize, residuals: Vec<f64> },

    #[error("unsupported operation: {0}")]
    Unsupported(String),

    #[error("degenerate pairing <w, w*> = {0}")]
    DegeneratePairing(f64),

    #[error("degenerate solution: {0}")]
    DegenerateSolution(String),

    #[error("oracle failure: {0}")]
    Oracle(String),

    #[error("oracle refused: state dimension {dim} exceeds cap {cap}")]
    OracleRefused { dim: usize, cap: usize },
}
