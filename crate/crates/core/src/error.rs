//! Error type shared across the crate.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("grid mismatch between operands")]
    GridMismatch,

    #[error("shape mismatch: expected {expected} samples, got {got}")]
    ShapeMismatch { expected: usize, got: usize },

    #[error("field is not divergence-free (relative residual {residual:.3e})")]
    NotDivergenceFree { residual: f64 },

    #[error("nonzero mean mode with negative fractional power (|coeff| = {magnitude:.3e})")]
    SingularMeanMode { magnitude: f64 },

    #[error("invalid noise specification: {0}")]
    InvalidNoise(String),

    #[error("event at t = {time} outside [0, {horizon}]")]
    EventOutOfRange { time: f64, horizon: f64 },

    #[error("smallness gate failed: could not shrink the local interval below {tau:.3e} (N_tau = {n_tau:.3e}, bound = {bound:.3e})")]
    SmallnessGate { tau: f64, n_tau: f64, bound: f64 },

    #[error("Picard iteration did not converge after {iterations} sweeps (last difference {last_diff:.3e})")]
    PicardDiverged { iterations: usize, last_diff: f64 },

    #[error("solution blow-up at t = {time:.6} (norm {norm:.3e} exceeds 1e12)")]
    BlowUp { time: f64, norm: f64 },

    #[error("empty trajectory record")]
    EmptyRecord,

    #[error("snapshot i/o: {0}")]
    Io(#[from] std::io::Error),

    #[error("corrupt snapshot: {0}")]
    CorruptSnapshot(String),
}

pub type Result<T> = std::result::Result<T, Error>;
