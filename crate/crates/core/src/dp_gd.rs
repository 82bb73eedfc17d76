//! Full-batch differentially private gradient descent.
//!
//! Each step computes the per-sample gradients of the quadratic loss
//! `(φ_i·θ − y_i)²`, rescales every gradient to norm at most `C_clip`,
//! averages them and adds isotropic Gaussian noise of standard deviation
//! `√η · (2 C_clip / n) · σ`:
//!
//! ```text
//! θ_t = θ_{t−1} − η · mean_i clip(g_i(θ_{t−1})) + √η (2 C_clip / n) σ ξ_t
//! ```
//!
//! Clipping the gradient `2 z_i φ_i` of sample `i` (residual `z_i`) is the
//! same as replacing the loss derivative `2z` by the clipped derivative
//! `2z · min(1, C_clip / (2|z| ‖φ_i‖))`, which is how the aggregated update is
//! evaluated here: one `Φθ` product, one `Φᵀc` product, no per-sample
//! p-vectors. [`clip_gradient`] keeps the literal per-sample form for
//! cross-checking.

use std::io::{Read, Write};

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};
use crate::rf_model::Design;
use crate::rng::{self, Rng};

/// Iterates whose norm exceeds this are reported as divergent.
pub const DIVERGENCE_NORM: f64 = 1e12;
/// Store every iterate while `p · (T + 1)` stays under this many values.
pub const DENSE_CHECKPOINT_LIMIT: usize = 10_000_000;

/// Per-sample gradient norm cap.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClipBound {
    Finite(f64),
    /// Never clip. Only valid together with zero noise.
    Never,
}

impl ClipBound {
    pub fn value(&self) -> f64 {
        match self {
            ClipBound::Finite(c) => *c,
            ClipBound::Never => f64::INFINITY,
        }
    }

    fn validate(&self) -> Result<()> {
        match self {
            ClipBound::Finite(c) if !(*c > 0.0) || !c.is_finite() => Err(Error::Config(format!(
                "clipping constant must be positive and finite, got {c}"
            ))),
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DpGdConfig {
    /// Step size (time units).
    pub eta: f64,
    /// Iteration count `T`.
    pub steps: usize,
    pub clip: ClipBound,
    /// Noise multiplier.
    pub sigma: f64,
    /// Initialization; `None` means the zero vector.
    pub theta0: Option<DVector<f64>>,
    /// Keep the Gaussian noise added at each step.
    pub record_noise: bool,
}

impl DpGdConfig {
    pub fn new(eta: f64, steps: usize, clip: ClipBound, sigma: f64) -> Self {
        Self {
            eta,
            steps,
            clip,
            sigma,
            theta0: None,
            record_noise: false,
        }
    }

    pub fn validate(&self, p: usize) -> Result<()> {
        if !(self.eta > 0.0) || !self.eta.is_finite() {
            return Err(Error::Config(format!("step size must be positive, got {}", self.eta)));
        }
        if self.steps < 1 {
            return Err(Error::Config("iteration count must be at least 1".into()));
        }
        if !(self.sigma >= 0.0) || !self.sigma.is_finite() {
            return Err(Error::Config(format!(
                "noise multiplier must be >= 0, got {}",
                self.sigma
            )));
        }
        self.clip.validate()?;
        if self.clip == ClipBound::Never && self.sigma > 0.0 {
            return Err(Error::Config(
                "noise calibrated to an infinite clipping constant is infinite".into(),
            ));
        }
        if let Some(t0) = &self.theta0 {
            check_len("initialization", p, t0.len())?;
        }
        Ok(())
    }

    /// Standard deviation of the per-coordinate noise added at each step.
    pub fn noise_std(&self, n: usize) -> f64 {
        if self.sigma == 0.0 {
            return 0.0;
        }
        self.eta.sqrt() * (2.0 * self.clip.value() / n as f64) * self.sigma
    }

    /// Realized training time `η T`.
    pub fn horizon(&self) -> f64 {
        self.eta * self.steps as f64
    }
}

/// Number of steps for a continuous horizon: `T = ceil(τ/η)`, with ratios
/// within 1e-9 of an integer snapped to it.
pub fn steps_for(tau: f64, eta: f64) -> usize {
    let ratio = tau / eta;
    let nearest = ratio.round();
    if (ratio - nearest).abs() <= 1e-9 * nearest.max(1.0) {
        nearest as usize
    } else {
        ratio.ceil() as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckpointPolicy {
    Every,
    /// Steps `0, 1, 2, 4, 8, …` plus the final step.
    Geometric,
}

impl CheckpointPolicy {
    pub fn for_run(p: usize, steps: usize) -> Self {
        if p.saturating_mul(steps + 1) <= DENSE_CHECKPOINT_LIMIT {
            CheckpointPolicy::Every
        } else {
            CheckpointPolicy::Geometric
        }
    }

    fn keeps(&self, step: usize, last: usize) -> bool {
        match self {
            CheckpointPolicy::Every => true,
            CheckpointPolicy::Geometric => step == 0 || step == last || step.is_power_of_two(),
        }
    }
}

/// Output of a training run.
#[derive(Debug, Clone)]
pub struct Trajectory {
    /// `(step, θ_step)` pairs in increasing step order.
    pub checkpoints: Vec<(usize, DVector<f64>)>,
    pub policy: CheckpointPolicy,
    /// `clip_events[(t − 1) · n + i]`: sample `i` was clipped in step `t`.
    clip_events: Vec<bool>,
    samples: usize,
    /// `‖θ_t − θ_{t−1}‖₂` for `t = 1..=T`.
    pub displacements: Vec<f64>,
    /// Noise added at each step, when recorded.
    pub noise: Option<Vec<DVector<f64>>>,
    pub eta: f64,
    pub steps: usize,
    pub clip: ClipBound,
}

impl Trajectory {
    pub fn final_theta(&self) -> &DVector<f64> {
        &self.checkpoints.last().expect("trajectory always holds θ_0").1
    }

    pub fn samples(&self) -> usize {
        self.samples
    }

    /// Clip flags of step `t` (1-based).
    pub fn clip_events(&self, step: usize) -> &[bool] {
        let n = self.samples;
        &self.clip_events[(step - 1) * n..step * n]
    }

    pub fn clip_count(&self) -> usize {
        self.clip_events.iter().filter(|&&c| c).count()
    }

    /// Fraction of (step, sample) pairs that were clipped.
    pub fn clip_fraction(&self) -> f64 {
        if self.clip_events.is_empty() {
            0.0
        } else {
            self.clip_count() as f64 / self.clip_events.len() as f64
        }
    }

    pub fn step_clip_fraction(&self, step: usize) -> f64 {
        if step == 0 {
            return 0.0;
        }
        let ev = self.clip_events(step);
        ev.iter().filter(|&&c| c).count() as f64 / ev.len() as f64
    }

    /// Writes the binary checkpoint file: magic `DPGD`, version `u32`, `p: u64`,
    /// `count: u64`, then `count · p` little-endian `f64` values.
    pub fn write_checkpoints<W: Write>(&self, mut w: W) -> Result<()> {
        let p = self.final_theta().len();
        w.write_all(CHECKPOINT_MAGIC)?;
        w.write_all(&CHECKPOINT_VERSION.to_le_bytes())?;
        w.write_all(&(p as u64).to_le_bytes())?;
        w.write_all(&(self.checkpoints.len() as u64).to_le_bytes())?;
        for (_, theta) in &self.checkpoints {
            for v in theta.iter() {
                w.write_all(&v.to_le_bytes())?;
            }
        }
        Ok(())
    }

    /// CSV summary with columns `step,train_loss,clip_fraction,theta_norm`.
    /// `clip_fraction` at step `t` is the fraction of samples clipped in the
    /// update that produced `θ_t` (zero at `t = 0`).
    pub fn write_summary_csv<W: Write>(&self, design: &Design, mut w: W) -> Result<()> {
        writeln!(w, "step,train_loss,clip_fraction,theta_norm")?;
        for (step, theta) in &self.checkpoints {
            writeln!(
                w,
                "{step},{:.16e},{:.16e},{:.16e}",
                design.train_loss(theta),
                self.step_clip_fraction(*step),
                theta.norm()
            )?;
        }
        Ok(())
    }
}

const CHECKPOINT_MAGIC: &[u8; 4] = b"DPGD";
const CHECKPOINT_VERSION: u32 = 1;

/// Reads a checkpoint file written by [`Trajectory::write_checkpoints`].
pub fn read_checkpoints<R: Read>(mut r: R) -> Result<Vec<DVector<f64>>> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != CHECKPOINT_MAGIC {
        return Err(Error::Format(format!("bad magic {magic:?}")));
    }
    let mut b4 = [0u8; 4];
    r.read_exact(&mut b4)?;
    let version = u32::from_le_bytes(b4);
    if version != CHECKPOINT_VERSION {
        return Err(Error::Format(format!("unsupported version {version}")));
    }
    let mut b8 = [0u8; 8];
    r.read_exact(&mut b8)?;
    let p = u64::from_le_bytes(b8) as usize;
    r.read_exact(&mut b8)?;
    let count = u64::from_le_bytes(b8) as usize;
    let mut out = Vec::with_capacity(count);
    for _ in 0..count {
        let mut theta = DVector::zeros(p);
        for v in theta.iter_mut() {
            r.read_exact(&mut b8)?;
            *v = f64::from_le_bytes(b8);
        }
        out.push(theta);
    }
    Ok(out)
}

/// Gradient of `(φ·θ − y)²`: `2 φ (φ·θ − y)`.
pub fn per_sample_gradient(theta: &DVector<f64>, phi: &DVector<f64>, y: f64) -> Result<DVector<f64>> {
    check_len("per-sample gradient", theta.len(), phi.len())?;
    Ok(phi * (2.0 * (phi.dot(theta) - y)))
}

/// Rescales `g` to norm at most `c_clip`; the flag reports `‖g‖ > c_clip`.
pub fn clip_gradient(g: &DVector<f64>, c_clip: f64) -> Result<(DVector<f64>, bool)> {
    if !(c_clip > 0.0) {
        return Err(Error::Config(format!(
            "clipping constant must be positive, got {c_clip}"
        )));
    }
    let norm = g.norm();
    let factor = (norm / c_clip).max(1.0);
    Ok((g / factor, norm > c_clip))
}

/// Derivative of the clipped surrogate loss at residual `z` for a sample with
/// feature norm `feat_norm`: `2z · min(1, C_clip / (2|z| ‖φ‖))`.
pub fn clipped_loss_derivative(z: f64, feat_norm: f64, c_clip: f64) -> Result<f64> {
    if !(feat_norm > 0.0) {
        return Err(Error::DegenerateFeature(feat_norm));
    }
    Ok(clipped_derivative(z, feat_norm, c_clip))
}

#[inline]
fn clipped_derivative(z: f64, feat_norm: f64, c_clip: f64) -> f64 {
    let raw = 2.0 * z;
    if z == 0.0 {
        return raw;
    }
    raw * (c_clip / (raw.abs() * feat_norm)).min(1.0)
}

/// `∇L_clip(θ) = (1/n) Σ_i ℓ'_{i,C}(φ_i·θ − y_i) φ_i`, and which samples were clipped.
pub fn clipped_gradient(design: &Design, theta: &DVector<f64>, clip: ClipBound) -> (DVector<f64>, Vec<bool>) {
    let mut coef = design.residuals(theta);
    let mut flags = vec![false; coef.len()];
    match clip {
        ClipBound::Never => coef.apply(|z| *z *= 2.0),
        ClipBound::Finite(c) => {
            for (i, z) in coef.iter_mut().enumerate() {
                let norm = design.row_norms()[i];
                flags[i] = 2.0 * z.abs() * norm > c;
                *z = if norm > 0.0 {
                    clipped_derivative(*z, norm, c)
                } else {
                    0.0
                };
            }
        }
    }
    let grad = design.phi().tr_mul(&coef) / design.samples() as f64;
    (grad, flags)
}

/// One noiseless descent step `θ − η ∇L_clip(θ)`.
pub(crate) fn descent_step(
    design: &Design,
    theta: &DVector<f64>,
    eta: f64,
    clip: ClipBound,
) -> (DVector<f64>, Vec<bool>) {
    let (grad, flags) = clipped_gradient(design, theta, clip);
    (theta - grad * eta, flags)
}

pub(crate) fn check_finite(step: usize, theta: &DVector<f64>) -> Result<()> {
    let norm = theta.norm();
    if !norm.is_finite() || norm > DIVERGENCE_NORM {
        return Err(Error::Divergence { step, norm });
    }
    Ok(())
}

/// Runs DP-GD on the given design.
pub fn run_dp_gd(cfg: &DpGdConfig, design: &Design, rng: &mut Rng) -> Result<Trajectory> {
    let p = design.width();
    let n = design.samples();
    cfg.validate(p)?;
    let std = cfg.noise_std(n);
    let policy = CheckpointPolicy::for_run(p, cfg.steps);
    let mut theta = cfg.theta0.clone().unwrap_or_else(|| DVector::zeros(p));
    let mut checkpoints = vec![(0, theta.clone())];
    let mut clip_events = Vec::with_capacity(cfg.steps * n);
    let mut displacements = Vec::with_capacity(cfg.steps);
    let mut noise = cfg.record_noise.then(|| Vec::with_capacity(cfg.steps));

    for step in 1..=cfg.steps {
        let (mut next, flags) = descent_step(design, &theta, cfg.eta, cfg.clip);
        clip_events.extend_from_slice(&flags);
        if std > 0.0 {
            let xi = rng::gaussian_vector(rng, p) * std;
            next += &xi;
            if let Some(store) = noise.as_mut() {
                store.push(xi);
            }
        } else if let Some(store) = noise.as_mut() {
            store.push(DVector::zeros(p));
        }
        check_finite(step, &next)?;
        displacements.push((&next - &theta).norm());
        theta = next;
        if policy.keeps(step, cfg.steps) {
            checkpoints.push((step, theta.clone()));
        }
    }

    Ok(Trajectory {
        checkpoints,
        policy,
        clip_events,
        samples: n,
        displacements,
        noise,
        eta: cfg.eta,
        steps: cfg.steps,
        clip: cfg.clip,
    })
}

/// Largest stable step size for GD on the quadratic loss: `2 / λ_max(2ΦᵀΦ/n) = n / λ_max(K)`.
pub fn stability_bound(design: &Design) -> f64 {
    design.samples() as f64 / design.kernel_lambda_max()
}

/// Deterministic GD on the unclipped quadratic loss.
///
/// `cfg.sigma` and `cfg.clip` are ignored (treated as zero and never).
/// Fails if `η` is not below the stability bound.
pub fn run_gd(cfg: &DpGdConfig, design: &Design) -> Result<Trajectory> {
    let bound = stability_bound(design);
    if !(cfg.eta < bound) {
        return Err(Error::Stability { eta: cfg.eta, bound });
    }
    let gd = DpGdConfig {
        sigma: 0.0,
        clip: ClipBound::Never,
        ..cfg.clone()
    };
    // The generator is never drawn from when σ = 0.
    let mut unused = rng::seeded(0, 0);
    run_dp_gd(&gd, design, &mut unused)
}

/// Per-sample clipping status of `θ` and the smallest distance to the threshold.
#[derive(Debug, Clone, PartialEq)]
pub struct ClipStatus {
    /// Sample `i` is flagged iff `|φ_i·θ − y_i| ≥ C_clip / (2‖φ_i‖)`.
    pub flags: Vec<bool>,
    /// `min_i (C_clip / (2‖φ_i‖) − |φ_i·θ − y_i|)`; positive iff no sample is flagged.
    pub margin: f64,
}

impl ClipStatus {
    pub fn any(&self) -> bool {
        self.flags.iter().any(|&f| f)
    }
}

pub fn detect_clipping(theta: &DVector<f64>, design: &Design, c_clip: f64) -> Result<ClipStatus> {
    if !(c_clip > 0.0) {
        return Err(Error::Config(format!(
            "clipping constant must be positive, got {c_clip}"
        )));
    }
    check_len("detect_clipping parameters", design.width(), theta.len())?;
    let residuals = design.residuals(theta);
    let mut margin = f64::INFINITY;
    let flags = residuals
        .iter()
        .zip(design.row_norms().iter())
        .map(|(r, norm)| {
            let threshold = c_clip / (2.0 * norm);
            let slack = threshold - r.abs();
            margin = margin.min(slack);
            r.abs() >= threshold
        })
        .collect();
    Ok(ClipStatus { flags, margin })
}
