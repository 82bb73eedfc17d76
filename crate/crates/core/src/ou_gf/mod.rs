//! Closed-form training dynamics in the singular basis of the feature matrix.
//!
//! With `θ₀ = 0` the drift of the quadratic loss never leaves the row space
//! of `Φ`, so gradient flow, the exact Ornstein–Uhlenbeck law of the noisy
//! dynamics, and its coupling to Euler–Maruyama all reduce to at most `n`
//! scalar modes plus a Wiener component on the orthogonal complement. The
//! `p × p` matrix `ΦᵀΦ` is never formed.

mod euler;
mod ou;
mod risk;
mod spectral;

pub use euler::{euler_maruyama, ou_exact_on_path, BrownianPath};
pub use ou::{
    feature_fluctuation_variance, gradient_flow, mode_variance, ou_sample, ou_sample_modes, test_fluctuation_variance,
    OuSample,
};
pub use risk::{excess_risk, paired_report, LossEstimate, RiskReport, TestSet, MIN_TEST_COUNT};
pub use spectral::{decompose, SpectralDecomp, RANK_TOL};
