//! Gauss–Hermite quadrature against the standard Gaussian measure.
//!
//! Nodes are the roots of the probabilists' Hermite polynomial `He_N`,
//! obtained from the Jacobi matrix (Golub–Welsch) and polished by Newton
//! steps on the orthonormal recurrence. Weights come from the Christoffel
//! formula `w_i = 1 / Σ_{k<N} h_k(x_i)²`, evaluated with running rescaling so
//! that large node counts do not overflow. Weights sum to one, so
//! [`GaussHermite::expect`] approximates `E[f(ρ)]` for `ρ ~ N(0, 1)`.

use nalgebra::{DMatrix, SymmetricEigen};

/// Normalized probabilists' Hermite polynomials `h_l = He_l / √(l!)`,
/// evaluated at `z` for `l = 0..=order`.
pub fn normalized_hermite(z: f64, order: usize) -> Vec<f64> {
    let mut h = Vec::with_capacity(order + 1);
    h.push(1.0);
    if order == 0 {
        return h;
    }
    h.push(z);
    for l in 1..order {
        let next = (z * h[l] - (l as f64).sqrt() * h[l - 1]) / ((l + 1) as f64).sqrt();
        h.push(next);
    }
    h
}

#[derive(Debug, Clone)]
pub struct GaussHermite {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussHermite {
    pub fn new(count: usize) -> Self {
        assert!(count >= 1, "quadrature needs at least one node");
        let mut jacobi = DMatrix::<f64>::zeros(count, count);
        for k in 1..count {
            let b = (k as f64).sqrt();
            jacobi[(k - 1, k)] = b;
            jacobi[(k, k - 1)] = b;
        }
        let mut nodes: Vec<f64> = SymmetricEigen::new(jacobi).eigenvalues.iter().copied().collect();
        nodes.sort_by(|a, b| a.total_cmp(b));

        let weights = nodes
            .iter_mut()
            .map(|x| {
                for _ in 0..3 {
                    let (ratio, _) = newton_ratio(*x, count);
                    *x -= ratio;
                }
                christoffel_weight(*x, count)
            })
            .collect::<Vec<_>>();
        // Symmetrize: the rule is exact for odd functions only if x_i = -x_{N-1-i}.
        let mut gh = Self { nodes, weights };
        gh.symmetrize();
        gh
    }

    fn symmetrize(&mut self) {
        let n = self.nodes.len();
        for i in 0..n / 2 {
            let j = n - 1 - i;
            let x = 0.5 * (self.nodes[j] - self.nodes[i]);
            let w = 0.5 * (self.weights[i] + self.weights[j]);
            self.nodes[i] = -x;
            self.nodes[j] = x;
            self.weights[i] = w;
            self.weights[j] = w;
        }
        if n % 2 == 1 {
            self.nodes[n / 2] = 0.0;
        }
        let total: f64 = self.weights.iter().sum();
        for w in &mut self.weights {
            *w /= total;
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Approximates `E[f(ρ)]`, `ρ ~ N(0, 1)`.
    pub fn expect<F: Fn(f64) -> f64>(&self, f: F) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(&x, &w)| w * f(x)).sum()
    }
}

/// Returns `h_N(x) / h_N'(x)` for the Newton update, with `h_N' = √N h_{N-1}`.
fn newton_ratio(x: f64, count: usize) -> (f64, f64) {
    let mut prev = 0.0;
    let mut cur = 1.0;
    for l in 0..count {
        let next = (x * cur - (l as f64).sqrt() * prev) / ((l + 1) as f64).sqrt();
        prev = cur;
        cur = next;
        if cur.abs() > 1e150 {
            prev *= 1e-150;
            cur *= 1e-150;
        }
    }
    let deriv = (count as f64).sqrt() * prev;
    (cur / deriv, deriv)
}

fn christoffel_weight(x: f64, count: usize) -> f64 {
    // Accumulate Σ h_k² with a running log-scale to survive large |x|.
    let mut log_scale = 0.0f64;
    let mut prev = 0.0;
    let mut cur = 1.0;
    let mut sum = 1.0;
    for l in 0..count - 1 {
        let next = (x * cur - (l as f64).sqrt() * prev) / ((l + 1) as f64).sqrt();
        prev = cur;
        cur = next;
        sum += cur * cur;
        if sum > 1e200 {
            let s = 1e-100;
            prev *= s;
            cur *= s;
            sum *= s * s;
            log_scale += -2.0 * s.ln();
        }
    }
    (-(sum.ln() + log_scale)).exp()
}
