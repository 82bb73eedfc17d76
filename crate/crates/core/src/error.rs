use thiserror::Error;

/// Errors produced by the dpflow library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch in {context}: expected {expected}, got {got}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("activation is not admissible: {0}")]
    Inadmissible(String),

    #[error("degenerate feature vector: norm must be positive, got {0}")]
    DegenerateFeature(f64),

    #[error("privacy budget out of range: epsilon = {epsilon} must lie in (0, {upper}) for delta = {delta}")]
    BudgetRange { epsilon: f64, delta: f64, upper: f64 },

    #[error("privacy loss is unbounded: zero noise over {steps} step(s)")]
    InfiniteLoss { steps: usize },

    #[error("iterate diverged at step {step} (norm {norm:e})")]
    Divergence { step: usize, norm: f64 },

    #[error("step size {eta} exceeds the stability bound {bound}")]
    Stability { eta: f64, bound: f64 },

    #[error("brownian path too short: need {needed} fine increments, have {available}")]
    PathLength { needed: usize, available: usize },

    #[error("step size {eta} is not an integer multiple of the path resolution {dt}")]
    PathResolution { eta: f64, dt: f64 },

    #[error("configuration outside the supported regime: {0}")]
    Regime(String),

    #[error("numerical failure: {0}")]
    Numeric(String),

    #[error("malformed checkpoint file: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_len(context: &'static str, expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { context, expected, got })
    }
}
