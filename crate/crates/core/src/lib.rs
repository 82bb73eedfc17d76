//! Differentially private gradient descent on random-features regression.
//!
//! * [`rf_model`]: data, random feature maps, Hermite analysis of activations, kernels.
//! * [`dp_gd`]: DP-GD with per-sample clipping, the GD baseline, trajectory export.
//! * [`privacy`]: moment-accountant calibration and default hyper-parameters.
//! * [`ou_gf`]: gradient flow, exact Ornstein–Uhlenbeck sampling, Euler–Maruyama, excess risk.
//! * [`diagnostics`]: kernel spectral gap, clipping-free certificates, regime checks.
//! * [`harness`]: experiment sweeps with CSV and SVG output.

// `!(x > 0.0)` is used to reject NaN along with non-positive values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod diagnostics;
pub mod dp_gd;
pub mod error;
pub mod harness;
pub mod ou_gf;
pub mod privacy;
pub mod quadrature;
pub mod rf_model;
pub mod rng;

pub use diagnostics::{
    clip_free_certificate, regime_check, spectrum_report, ClipCertificate, RegimeReport, SpectrumReport,
};
pub use dp_gd::{run_dp_gd, run_gd, ClipBound, DpGdConfig, Trajectory};
pub use error::{Error, Result};
pub use ou_gf::{decompose, RiskReport, SpectralDecomp};
pub use privacy::{calibrate_sigma, paper_hyperparams, verify_tail, PaperHyperparams, PrivacyBudget};
pub use rf_model::{Activation, Dataset, Design, FeatureMap, HermiteCoeffs};
