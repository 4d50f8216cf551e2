use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("rank {rank} is out of range for {op}")]
    Rank { op: &'static str, rank: usize },
    #[error("shape mismatch in {op}: {detail}")]
    ShapeMismatch { op: &'static str, detail: String },
    #[error("non-finite sample in {0}")]
    NonFinite(&'static str),
    #[error("domain violation: {what} (min {min:e})")]
    Domain { what: &'static str, min: f64 },
    #[error("instability: magnitude {magnitude:e} exceeds {limit:e} at t = {t:e}")]
    Unstable { magnitude: f64, limit: f64, t: f64 },
    #[error("conjugate gradient did not converge in {iterations} iterations (relative residual {residual:e})")]
    CgDiverged { iterations: usize, residual: f64 },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("history step mismatch: dt = {dt:e}, ds = {ds:e}")]
    HistoryStep { dt: f64, ds: f64 },
    #[error("empty history buffer")]
    EmptyHistory,
    #[error("process mismatch: {0}")]
    ProcessMismatch(String),
    #[error("not a cycle: closure error {closure:e} exceeds {tolerance:e}")]
    NotACycle { closure: f64, tolerance: f64 },
    #[error("missing channel `{0}`")]
    MissingChannel(String),
    #[error("not applicable: {0}")]
    NotApplicable(String),
}
