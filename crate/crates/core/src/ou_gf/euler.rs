use nalgebra::{DMatrix, DVector};

use crate::dp_gd::{check_finite, descent_step, steps_for, ClipBound};
use crate::error::{Error, Result};
use crate::rf_model::Design;
use crate::rng::{self, Rng};

use super::spectral::SpectralDecomp;

/// Pre-generated Brownian increments at the finest resolution `dt`.
///
/// Coarser schemes sum consecutive increments, so every refinement of a run
/// sees the same underlying path.
#[derive(Debug, Clone)]
pub struct BrownianPath {
    /// `p × N`; column `j` is `B((j+1)dt) − B(j dt)`.
    increments: DMatrix<f64>,
    /// `modes × N` auxiliary standard normals used by the exact OU transition.
    aux: DMatrix<f64>,
    dt: f64,
}

impl BrownianPath {
    pub fn sample(p: usize, modes: usize, steps: usize, dt: f64, rng: &mut Rng) -> Result<Self> {
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(Error::Config(format!("path resolution must be positive, got {dt}")));
        }
        let scale = dt.sqrt();
        let mut increments = DMatrix::zeros(p, steps);
        for j in 0..steps {
            for i in 0..p {
                increments[(i, j)] = scale * rng::standard_normal(rng);
            }
        }
        let mut aux = DMatrix::zeros(modes, steps);
        for j in 0..steps {
            for i in 0..modes {
                aux[(i, j)] = rng::standard_normal(rng);
            }
        }
        Ok(Self { increments, aux, dt })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn len(&self) -> usize {
        self.increments.ncols()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn width(&self) -> usize {
        self.increments.nrows()
    }

    /// `B(end·dt) − B(start·dt)`.
    pub fn increment(&self, start: usize, end: usize) -> DVector<f64> {
        let mut acc = DVector::zeros(self.width());
        for j in start..end {
            acc += self.increments.column(j);
        }
        acc
    }

    fn require(&self, needed: usize) -> Result<()> {
        if needed > self.len() {
            return Err(Error::PathLength {
                needed,
                available: self.len(),
            });
        }
        Ok(())
    }
}

/// Number of fine increments per step of size `eta`.
fn stride(eta: f64, dt: f64) -> Result<usize> {
    let ratio = eta / dt;
    let k = ratio.round();
    if k < 1.0 || (ratio - k).abs() > 1e-9 * k {
        return Err(Error::PathResolution { eta, dt });
    }
    Ok(k as usize)
}

/// Euler–Maruyama scheme for `dΘ = −∇L_clip(Θ)dt + Σ dB` on `[0, τ]` with step
/// `eta`, `Θ(0) = 0`, driven by `path`.
pub fn euler_maruyama(
    tau: f64,
    eta: f64,
    design: &Design,
    clip: ClipBound,
    big_sigma: f64,
    path: &BrownianPath,
) -> Result<DVector<f64>> {
    if path.width() != design.width() {
        return Err(Error::DimensionMismatch {
            context: "brownian path width",
            expected: design.width(),
            got: path.width(),
        });
    }
    let k = stride(eta, path.dt())?;
    let steps = steps_for(tau, eta);
    path.require(steps * k)?;
    let mut theta = DVector::zeros(design.width());
    for step in 0..steps {
        let (mut next, _) = descent_step(design, &theta, eta, clip);
        if big_sigma != 0.0 {
            next.axpy(big_sigma, &path.increment(step * k, (step + 1) * k), 1.0);
        }
        check_finite(step + 1, &next)?;
        theta = next;
    }
    Ok(theta)
}

/// Conditional-variance factor of the exact OU transition: with
/// `x = Δh`, returns `(1 − e^{−x})/x` and `Var[I − a·w]/h` where `I` is the
/// stochastic convolution over one fine step and `w` the Brownian increment.
fn transition_factors(x: f64) -> (f64, f64) {
    if x == 0.0 {
        return (1.0, 0.0);
    }
    let a = -(-x).exp_m1() / x;
    let b2 = if x < 1e-2 {
        x * x / 12.0 - x.powi(3) / 12.0 + 17.0 * x.powi(4) / 360.0 - 7.0 * x.powi(5) / 360.0
    } else {
        -(-2.0 * x).exp_m1() / (2.0 * x) - a * a
    };
    (a, b2.max(0.0))
}

/// Exact OU solution at `τ` on the same Brownian path used by
/// [`euler_maruyama`], for the unclipped quadratic loss.
pub fn ou_exact_on_path(
    tau: f64,
    sd: &SpectralDecomp,
    y: &DVector<f64>,
    big_sigma: f64,
    path: &BrownianPath,
) -> Result<DVector<f64>> {
    if path.width() != sd.width() {
        return Err(Error::DimensionMismatch {
            context: "brownian path width",
            expected: sd.width(),
            got: path.width(),
        });
    }
    if path.aux.nrows() < sd.rank() {
        return Err(Error::Config(format!(
            "path carries {} auxiliary modes, decomposition has rank {}",
            path.aux.nrows(),
            sd.rank()
        )));
    }
    let h = path.dt();
    let steps = steps_for(tau, h);
    path.require(steps)?;
    let target = sd.interpolator_coords(y)?;
    let rates = sd.rates();
    let v = sd.right_vectors();
    let mut coords = DVector::zeros(sd.rank());
    let factors: Vec<(f64, f64, f64)> = rates
        .iter()
        .map(|&rate| {
            let x = rate * h;
            let (a, b2) = transition_factors(x);
            ((-x).exp(), a, (b2 * h).sqrt())
        })
        .collect();
    for j in 0..steps {
        let w = v.tr_mul(&path.increments.column(j));
        for k in 0..sd.rank() {
            let (decay, a, b) = factors[k];
            coords[k] = decay * coords[k] + (1.0 - decay) * target[k] + big_sigma * (a * w[k] + b * path.aux[(k, j)]);
        }
    }
    let mut theta = v * coords;
    if big_sigma != 0.0 {
        let b_tau = path.increment(0, steps);
        theta.axpy(big_sigma, &sd.complement(&b_tau)?, 1.0);
    }
    Ok(theta)
}
