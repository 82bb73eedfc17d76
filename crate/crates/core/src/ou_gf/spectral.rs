use nalgebra::{DMatrix, DVector, SVD};

use crate::error::{check_len, Error, Result};
use crate::rf_model::Design;

/// Relative singular-value threshold below which a mode counts as null.
pub const RANK_TOL: f64 = 1e-10;

/// Thin SVD `Φ = U S Vᵀ` of an `n × p` feature matrix.
///
/// Only the `r` modes above the rank tolerance keep their singular vectors;
/// everything else is treated as part of the orthogonal complement of the
/// row space.
#[derive(Debug, Clone)]
pub struct SpectralDecomp {
    /// All `min(n, p)` singular values, nonincreasing.
    singular_values: Vec<f64>,
    /// `p × r`, orthonormal columns.
    right: DMatrix<f64>,
    /// `n × r`, orthonormal columns.
    left: DMatrix<f64>,
    rank: usize,
    samples: usize,
    width: usize,
}

/// Thin SVD of the design's feature matrix, via a QR factorization of the
/// taller orientation followed by an SVD of the square triangular factor.
pub fn decompose(design: &Design) -> Result<SpectralDecomp> {
    SpectralDecomp::from_matrix(design.phi())
}

impl SpectralDecomp {
    pub fn from_matrix(phi: &DMatrix<f64>) -> Result<Self> {
        let (n, p) = phi.shape();
        if n == 0 || p == 0 {
            return Err(Error::Config("cannot decompose an empty feature matrix".into()));
        }
        // Φ = U S Vᵀ assembled from QR(Φᵀ) when wide, QR(Φ) when tall.
        let (left_full, values, right_full) = if p >= n {
            let qr = phi.transpose().qr();
            let (q, r) = (qr.q(), qr.r());
            let svd = square_svd(r.transpose())?;
            // Φ = Rᵀ Qᵀ = (U_s) S (Q V_s)ᵀ
            (svd.0, svd.1, q * svd.2)
        } else {
            let qr = phi.clone().qr();
            let (q, r) = (qr.q(), qr.r());
            let svd = square_svd(r)?;
            (q * svd.0, svd.1, svd.2)
        };
        let s_max = values.first().copied().unwrap_or(0.0);
        let rank = values.iter().take_while(|&&s| s > RANK_TOL * s_max && s > 0.0).count();
        Ok(Self {
            right: right_full.columns(0, rank).into_owned(),
            left: left_full.columns(0, rank).into_owned(),
            singular_values: values,
            rank,
            samples: n,
            width: p,
        })
    }

    pub fn singular_values(&self) -> &[f64] {
        &self.singular_values
    }

    /// Right singular vectors of the retained modes (`p × r`).
    pub fn right_vectors(&self) -> &DMatrix<f64> {
        &self.right
    }

    /// Left singular vectors of the retained modes (`n × r`).
    pub fn left_vectors(&self) -> &DMatrix<f64> {
        &self.left
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn samples(&self) -> usize {
        self.samples
    }

    pub fn width(&self) -> usize {
        self.width
    }

    /// Eigenvalues of `K = ΦΦᵀ`, nonincreasing, length `n`. Modes below the
    /// rank tolerance and the `n − p` structural zeros (when `p < n`) are 0.
    pub fn eigvals_k(&self) -> Vec<f64> {
        let mut out: Vec<f64> = self.singular_values[..self.rank].iter().map(|s| s * s).collect();
        out.resize(self.samples, 0.0);
        out
    }

    pub fn lambda_max(&self) -> f64 {
        self.singular_values.first().map_or(0.0, |s| s * s)
    }

    /// Smallest eigenvalue of `K`, zero when `K` is rank deficient.
    pub fn lambda_min(&self) -> f64 {
        if self.rank == self.samples {
            self.singular_values[self.rank - 1].powi(2)
        } else {
            0.0
        }
    }

    /// Per-mode decay rates `Δ_k = 2 s_k² / n` of the retained modes.
    pub fn rates(&self) -> Vec<f64> {
        let n = self.samples as f64;
        self.singular_values[..self.rank]
            .iter()
            .map(|s| 2.0 * s * s / n)
            .collect()
    }

    /// `(u_k · Y) / s_k` for each retained mode: coordinates of `Φ⁺Y`.
    pub fn interpolator_coords(&self, y: &DVector<f64>) -> Result<DVector<f64>> {
        check_len("labels", self.samples, y.len())?;
        let mut c = self.left.tr_mul(y);
        for (k, v) in c.iter_mut().enumerate() {
            *v /= self.singular_values[k];
        }
        Ok(c)
    }

    /// `Φ⁺Y`.
    pub fn pseudo_inverse_apply(&self, y: &DVector<f64>) -> Result<DVector<f64>> {
        Ok(&self.right * self.interpolator_coords(y)?)
    }

    /// Coordinates `Vᵀφ` of a p-vector in the retained right-singular basis.
    pub fn project(&self, v: &DVector<f64>) -> Result<DVector<f64>> {
        check_len("projected vector", self.width, v.len())?;
        Ok(self.right.tr_mul(v))
    }

    /// Component of `v` orthogonal to the retained row space.
    pub fn complement(&self, v: &DVector<f64>) -> Result<DVector<f64>> {
        let coords = self.project(v)?;
        Ok(v - &self.right * coords)
    }

    /// `‖P⊥ v‖₂²`.
    pub fn complement_norm_sq(&self, v: &DVector<f64>) -> Result<f64> {
        Ok(self.complement(v)?.norm_squared())
    }

    /// `‖Φ − U S Vᵀ‖_F` over the retained modes.
    pub fn reconstruction_error(&self, phi: &DMatrix<f64>) -> f64 {
        let mut us = self.left.clone();
        for k in 0..self.rank {
            us.column_mut(k).scale_mut(self.singular_values[k]);
        }
        (phi - us * self.right.transpose()).norm()
    }
}

/// SVD of a square matrix with singular values sorted nonincreasing.
/// Returns `(U, s, V)`, not `Vᵀ`.
fn square_svd(m: DMatrix<f64>) -> Result<(DMatrix<f64>, Vec<f64>, DMatrix<f64>)> {
    let k = m.nrows();
    let svd =
        SVD::try_new(m, true, true, f64::EPSILON, 0).ok_or_else(|| Error::Numeric("SVD did not converge".into()))?;
    let (u, vt) = (svd.u.expect("requested U"), svd.v_t.expect("requested Vᵀ"));
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
    let values = order.iter().map(|&i| svd.singular_values[i]).collect();
    let u_sorted = DMatrix::from_fn(k, k, |r, c| u[(r, order[c])]);
    let v_sorted = DMatrix::from_fn(k, k, |r, c| vt[(order[c], r)]);
    Ok((u_sorted, values, v_sorted))
}
