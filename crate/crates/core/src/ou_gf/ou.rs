use nalgebra::DVector;

use crate::error::{check_len, Error, Result};
use crate::rf_model::FeatureMap;
use crate::rng::{self, Rng};

use super::spectral::SpectralDecomp;

fn check_time(t: f64) -> Result<()> {
    if !(t >= 0.0) || !t.is_finite() {
        return Err(Error::Config(format!("time must be finite and >= 0, got {t}")));
    }
    Ok(())
}

/// `1 − e^{−Δt}` for each retained mode.
fn relaxation(sd: &SpectralDecomp, t: f64) -> Vec<f64> {
    sd.rates().iter().map(|&rate| -(-rate * t).exp_m1()).collect()
}

/// Gradient-flow coordinates in the right-singular basis at time `t`.
fn flow_coords(t: f64, sd: &SpectralDecomp, y: &DVector<f64>) -> Result<DVector<f64>> {
    check_time(t)?;
    let mut c = sd.interpolator_coords(y)?;
    for (v, r) in c.iter_mut().zip(relaxation(sd, t)) {
        *v *= r;
    }
    Ok(c)
}

/// Gradient flow on the quadratic loss from `θ = 0`:
/// `θ̂(t) = Σ_k v_k (1 − e^{−Δ_k t}) (u_k·Y) / s_k`.
pub fn gradient_flow(t: f64, sd: &SpectralDecomp, y: &DVector<f64>) -> Result<DVector<f64>> {
    Ok(sd.right_vectors() * flow_coords(t, sd, y)?)
}

/// Variance at time `t` of a mode with rate `Δ` driven by noise scale `Σ`,
/// started from a deterministic point: `Σ²(1 − e^{−2Δt}) / (2Δ)`, or `Σ²t`
/// when `Δ = 0`.
pub fn mode_variance(rate: f64, t: f64, big_sigma: f64) -> f64 {
    let s2 = big_sigma * big_sigma;
    if rate == 0.0 {
        s2 * t
    } else {
        s2 * -(-2.0 * rate * t).exp_m1() / (2.0 * rate)
    }
}

/// A draw of the OU process at a fixed time, with the orthogonal complement
/// kept in distributional form.
#[derive(Debug, Clone)]
pub struct OuSample {
    /// Coordinates in the retained right-singular basis (mean plus fluctuation).
    pub row_coeffs: DVector<f64>,
    /// Per-coordinate variance of the complement component, `Σ²t`.
    pub complement_var: f64,
}

impl OuSample {
    /// Full p-vector: row-space part plus a Gaussian draw projected off the row space.
    pub fn materialize(&self, sd: &SpectralDecomp, rng: &mut Rng) -> Result<DVector<f64>> {
        let mut theta = sd.right_vectors() * &self.row_coeffs;
        if self.complement_var > 0.0 {
            let xi = rng::gaussian_vector(rng, sd.width()) * self.complement_var.sqrt();
            theta += sd.complement(&xi)?;
        }
        Ok(theta)
    }

    /// Mean and variance of `φ·Θ(t)` for a fixed feature vector, integrating
    /// out the complement component.
    pub fn predict(&self, sd: &SpectralDecomp, phi: &DVector<f64>) -> Result<(f64, f64)> {
        let coords = sd.project(phi)?;
        let mean = coords.dot(&self.row_coeffs);
        let var = self.complement_var * sd.complement_norm_sq(phi)?;
        Ok((mean, var))
    }
}

/// Samples the row-space coordinates of the OU process at time `t`.
pub fn ou_sample_modes(
    t: f64,
    sd: &SpectralDecomp,
    y: &DVector<f64>,
    big_sigma: f64,
    rng: &mut Rng,
) -> Result<OuSample> {
    if !(big_sigma >= 0.0) {
        return Err(Error::Config(format!("noise scale must be >= 0, got {big_sigma}")));
    }
    let mut c = flow_coords(t, sd, y)?;
    if big_sigma > 0.0 {
        for (v, rate) in c.iter_mut().zip(sd.rates()) {
            *v += mode_variance(rate, t, big_sigma).sqrt() * rng::standard_normal(rng);
        }
    }
    Ok(OuSample {
        row_coeffs: c,
        complement_var: big_sigma * big_sigma * t,
    })
}

/// Exact draw of the OU process `dΘ = −∇L(Θ)dt + Σ dB`, `Θ(0) = 0`, at time `t`.
pub fn ou_sample(t: f64, sd: &SpectralDecomp, y: &DVector<f64>, big_sigma: f64, rng: &mut Rng) -> Result<DVector<f64>> {
    ou_sample_modes(t, sd, y, big_sigma, rng)?.materialize(sd, rng)
}

/// `Var[φ(x)·Θ̃(t)]` for the zero-mean fluctuation of the OU process.
pub fn test_fluctuation_variance(
    x: &DVector<f64>,
    fm: &FeatureMap,
    sd: &SpectralDecomp,
    big_sigma: f64,
    t: f64,
) -> Result<f64> {
    check_time(t)?;
    check_len("feature map width", sd.width(), fm.width())?;
    let phi = fm.featurize(x)?;
    feature_fluctuation_variance(&phi, sd, big_sigma, t)
}

/// As [`test_fluctuation_variance`], for a precomputed feature vector.
pub fn feature_fluctuation_variance(phi: &DVector<f64>, sd: &SpectralDecomp, big_sigma: f64, t: f64) -> Result<f64> {
    check_time(t)?;
    let coords = sd.project(phi)?;
    let row: f64 = coords
        .iter()
        .zip(sd.rates())
        .map(|(c, rate)| c * c * mode_variance(rate, t, big_sigma))
        .sum();
    Ok(row + sd.complement_norm_sq(phi)? * big_sigma * big_sigma * t)
}
