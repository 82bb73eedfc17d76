//! Kernel spectral gap, clipping-free certificates for stored trajectories,
//! and where a problem size sits relative to the scaling regime.

use serde::{Deserialize, Serialize};

use crate::dp_gd::Trajectory;
use crate::error::{Error, Result};
use crate::ou_gf::SpectralDecomp;
use crate::rf_model::Design;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectrumReport {
    /// `d`-th largest eigenvalue of `K`.
    pub lambda_d: f64,
    pub lambda_d_plus_1: f64,
    pub lambda_min: f64,
    pub lambda_max: f64,
    /// `λ_d / λ_{d+1}`, infinite when `λ_{d+1} = 0`.
    pub gap_ratio: f64,
    pub n: usize,
    pub d: usize,
    pub p: usize,
}

pub fn spectrum_report(sd: &SpectralDecomp, d: usize) -> Result<SpectrumReport> {
    let n = sd.samples();
    if d < 1 || n <= d {
        return Err(Error::Regime(format!("need n > d >= 1, got n = {n}, d = {d}")));
    }
    let ev = sd.eigvals_k();
    let (lambda_d, lambda_d_plus_1) = (ev[d - 1], ev[d]);
    let gap_ratio = if lambda_d_plus_1 > 0.0 {
        lambda_d / lambda_d_plus_1
    } else {
        f64::INFINITY
    };
    Ok(SpectrumReport {
        lambda_d,
        lambda_d_plus_1,
        lambda_min: ev[n - 1],
        lambda_max: ev[0],
        gap_ratio,
        n,
        d,
        p: sd.width(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClipCertificate {
    /// True iff every margin is strictly positive.
    pub clip_free: bool,
    /// Smallest margin over all samples and all steps.
    pub worst_margin: f64,
    /// Step at which the worst margin occurs.
    pub worst_step: usize,
    /// Number of (step, sample) pairs with nonpositive margin.
    pub violations: usize,
}

/// Certifies that no iterate of the trajectory triggers clipping.
///
/// Stored checkpoints are checked exactly. For steps strictly between two
/// stored checkpoints `a < s < b`, the residual of sample `i` can move by at
/// most `‖φ_i‖ · Σ_{a<j<b} ‖θ_j − θ_{j−1}‖` from its value at `a`, and that
/// allowance is subtracted from the margin. The recorded step displacements
/// include the noise, so the bound holds for noisy runs.
pub fn clip_free_certificate(traj: &Trajectory, design: &Design, c_clip: f64) -> Result<ClipCertificate> {
    if !(c_clip > 0.0) {
        return Err(Error::Config(format!(
            "clipping constant must be positive, got {c_clip}"
        )));
    }
    let norms = design.row_norms();
    let thresholds: Vec<f64> = norms.iter().map(|nm| c_clip / (2.0 * nm)).collect();
    let mut worst = f64::INFINITY;
    let mut worst_step = 0;
    let mut violations = 0;
    let mut record = |margin: f64, step: usize, worst: &mut f64| {
        if margin <= 0.0 {
            violations += 1;
        }
        if margin < *worst {
            *worst = margin;
            worst_step = step;
        }
    };
    for (idx, (step, theta)) in traj.checkpoints.iter().enumerate() {
        let residuals = design.residuals(theta);
        for (i, r) in residuals.iter().enumerate() {
            record(thresholds[i] - r.abs(), *step, &mut worst);
        }
        if let Some((next, _)) = traj.checkpoints.get(idx + 1) {
            if next - step > 1 {
                let drift: f64 = traj.displacements[*step..next - 1].iter().sum();
                for (i, r) in residuals.iter().enumerate() {
                    record(thresholds[i] - r.abs() - norms[i] * drift, step + 1, &mut worst);
                }
            }
        }
    }
    Ok(ClipCertificate {
        clip_free: worst > 0.0,
        worst_margin: worst,
        worst_step,
        violations,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RegimeStatus {
    Inside,
    Boundary,
    Violated,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegimeCondition {
    pub name: String,
    pub ratio: f64,
    pub lower: Option<f64>,
    pub upper: f64,
    pub status: RegimeStatus,
}

impl RegimeCondition {
    fn new(name: &'static str, ratio: f64, lower: Option<f64>, upper: f64, strict: bool) -> Self {
        const EDGE: f64 = 1e-9;
        let near = |b: f64| (ratio - b).abs() <= EDGE * b.abs().max(1.0);
        let status = if near(upper) || lower.is_some_and(near) {
            RegimeStatus::Boundary
        } else if ratio > upper || lower.is_some_and(|l| ratio < l) {
            RegimeStatus::Violated
        } else {
            RegimeStatus::Inside
        };
        // Strict inequalities treat the boundary itself as outside.
        let status = if strict && status == RegimeStatus::Boundary {
            RegimeStatus::Violated
        } else {
            status
        };
        Self {
            name: name.to_string(),
            ratio,
            lower,
            upper,
            status,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegimeReport {
    pub n: usize,
    pub d: usize,
    pub p: usize,
    pub conditions: Vec<RegimeCondition>,
}

impl RegimeReport {
    pub fn all_inside(&self) -> bool {
        self.conditions.iter().all(|c| c.status == RegimeStatus::Inside)
    }

    pub fn condition(&self, name: &str) -> Option<&RegimeCondition> {
        self.conditions.iter().find(|c| c.name == name)
    }
}

/// Evaluates the four size conditions with all constants set to one:
///
/// * `n_sqrt_p`: `n² / p ≤ 1`
/// * `log_ratio`: `ln n / ln p ∈ [1/2, 1]`
/// * `n_lower`: `d ln²d / n < 1`
/// * `n_upper`: `n ln³d / d^{3/2} < 1`
pub fn regime_check(n: usize, d: usize, p: usize) -> RegimeReport {
    let (nf, df, pf) = (n as f64, d as f64, p as f64);
    let ld = df.ln();
    RegimeReport {
        n,
        d,
        p,
        conditions: vec![
            RegimeCondition::new("n_sqrt_p", nf * nf / pf, None, 1.0, false),
            RegimeCondition::new("log_ratio", nf.ln() / pf.ln(), Some(0.5), 1.0, false),
            RegimeCondition::new("n_lower", df * ld * ld / nf, None, 1.0, true),
            RegimeCondition::new("n_upper", nf * ld.powi(3) / df.powf(1.5), None, 1.0, true),
        ],
    }
}
