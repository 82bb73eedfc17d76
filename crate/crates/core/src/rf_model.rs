//! Random-features regression model.
//!
//! Inputs are Gaussian vectors rescaled to norm `√d`, labels follow the
//! teacher rule `y = sign(u·x)`, and the model is `f(x) = φ(Vx)·θ` with a
//! frozen Gaussian weight matrix `V` whose entries have variance `1/d`.
//! The activation's Hermite coefficients are computed by Gauss–Hermite
//! quadrature in the orthonormal probabilists' basis, so that the mean
//! kernel satisfies `E_v[φ(v·x)φ(v·x')] = Σ μ_l² (x·x'/d)^l`.

use std::io::Write;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};
use crate::quadrature::{normalized_hermite, GaussHermite};
use crate::rng::{self, stream};

/// Default truncation order of the Hermite expansion.
pub const DEFAULT_HERMITE_ORDER: usize = 12;
/// Default number of Gauss–Hermite nodes.
pub const DEFAULT_QUADRATURE_NODES: usize = 200;
/// Tolerance used by the admissibility check (`μ_0 = μ_2 = 0`, `μ_1 ≠ 0`).
pub const ADMISSIBILITY_TOL: f64 = 1e-10;

/// Training inputs, labels and (optionally) the teacher that produced them.
#[derive(Debug, Clone)]
pub struct Dataset {
    x: DMatrix<f64>,
    y: DVector<f64>,
    teacher: Option<DVector<f64>>,
    seed: u64,
}

impl Dataset {
    pub fn new(x: DMatrix<f64>, y: DVector<f64>, teacher: Option<DVector<f64>>, seed: u64) -> Result<Self> {
        check_len("dataset labels", x.nrows(), y.len())?;
        if let Some(u) = &teacher {
            check_len("teacher dimension", x.ncols(), u.len())?;
        }
        Ok(Self { x, y, teacher, seed })
    }

    pub fn inputs(&self) -> &DMatrix<f64> {
        &self.x
    }

    pub fn labels(&self) -> &DVector<f64> {
        &self.y
    }

    pub fn teacher(&self) -> Option<&DVector<f64>> {
        self.teacher.as_ref()
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn len(&self) -> usize {
        self.x.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.x.nrows() == 0
    }

    pub fn dim(&self) -> usize {
        self.x.ncols()
    }

    /// Returns a copy with sample `i` replaced by `(x, y)`.
    pub fn with_sample_replaced(&self, i: usize, x: &DVector<f64>, y: f64) -> Result<Self> {
        check_len("replacement sample", self.dim(), x.len())?;
        let mut out = self.clone();
        out.x.set_row(i, &x.transpose());
        out.y[i] = y;
        Ok(out)
    }

    /// Writes the dataset as CSV with columns `x_1..x_d, y`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        let header: Vec<String> = (1..=self.dim())
            .map(|j| format!("x_{j}"))
            .chain(std::iter::once("y".to_string()))
            .collect();
        writeln!(w, "{}", header.join(","))?;
        for i in 0..self.len() {
            let row: Vec<String> = self
                .x
                .row(i)
                .iter()
                .chain(std::iter::once(&self.y[i]))
                .map(|v| format!("{v:.16e}"))
                .collect();
            writeln!(w, "{}", row.join(","))?;
        }
        Ok(())
    }
}

/// `sign` with the convention `sign(0) = +1` (a probability-zero event).
pub fn sign_label(score: f64) -> f64 {
    if score >= 0.0 {
        1.0
    } else {
        -1.0
    }
}

/// Draws `m` standard Gaussian inputs in dimension `d`, each rescaled to norm `√d`.
pub fn sample_inputs<R: rand::Rng + ?Sized>(rng: &mut R, m: usize, d: usize) -> DMatrix<f64> {
    let target = (d as f64).sqrt();
    let mut x = DMatrix::zeros(m, d);
    let mut row = vec![0.0; d];
    for i in 0..m {
        loop {
            for v in row.iter_mut() {
                *v = rng::standard_normal(rng);
            }
            let norm = row.iter().map(|v| v * v).sum::<f64>().sqrt();
            if norm > 0.0 {
                for (j, v) in row.iter().enumerate() {
                    x[(i, j)] = v * (target / norm);
                }
                break;
            }
        }
    }
    x
}

/// Uniform draw from the unit sphere in dimension `d`.
pub fn sample_teacher<R: rand::Rng + ?Sized>(rng: &mut R, d: usize) -> DVector<f64> {
    loop {
        let u = rng::gaussian_vector(rng, d);
        let norm = u.norm();
        if norm > 0.0 {
            return u / norm;
        }
    }
}

pub fn teacher_labels(x: &DMatrix<f64>, teacher: &DVector<f64>) -> DVector<f64> {
    (x * teacher).map(sign_label)
}

/// Samples the synthetic sign task: `n` inputs of norm `√d`, a teacher on the
/// unit sphere, and labels `y_i = sign(u·x_i)`.
pub fn sample_data(n: usize, d: usize, seed: u64) -> Result<Dataset> {
    if n < 1 {
        return Err(Error::Config("sample_data needs n >= 1".into()));
    }
    if d < 2 {
        return Err(Error::Config("sample_data needs d >= 2".into()));
    }
    let mut rng = rng::seeded(seed, stream::DATA);
    let teacher = sample_teacher(&mut rng, d);
    let x = sample_inputs(&mut rng, n, d);
    let y = teacher_labels(&x, &teacher);
    Dataset::new(x, y, Some(teacher), seed)
}

/// Scalar nonlinearity applied component-wise to the pre-activations `Vx`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Tanh,
    Identity,
    /// Not admissible (`μ_0, μ_2 ≠ 0`); available to exercise strict mode.
    Relu,
    /// `φ(z) = Σ_l c_l h_l(z)` in the normalized Hermite basis.
    Hermite(Vec<f64>),
}

impl Activation {
    pub fn apply(&self, z: f64) -> f64 {
        match self {
            Activation::Tanh => z.tanh(),
            Activation::Identity => z,
            Activation::Relu => z.max(0.0),
            Activation::Hermite(c) => {
                if c.is_empty() {
                    return 0.0;
                }
                normalized_hermite(z, c.len() - 1)
                    .iter()
                    .zip(c)
                    .map(|(h, c)| h * c)
                    .sum()
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Admissibility {
    /// Reject activations violating `μ_0 = μ_2 = 0`, `μ_1 ≠ 0`.
    Strict,
    Lenient,
}

/// Hermite coefficients `μ_0..μ_L` of an activation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HermiteCoeffs {
    pub values: Vec<f64>,
    pub order: usize,
    pub quadrature_nodes: usize,
    /// Quadrature estimate of `E[φ(ρ)²]`.
    pub second_moment: f64,
}

impl HermiteCoeffs {
    pub fn mu(&self, l: usize) -> f64 {
        self.values[l]
    }

    /// `Σ_{l≤L} μ_l²`; bounded above by [`HermiteCoeffs::second_moment`].
    pub fn parseval_sum(&self) -> f64 {
        self.values.iter().map(|m| m * m).sum()
    }

    pub fn check_admissible(&self, tol: f64) -> Result<()> {
        let (m0, m1, m2) = (self.values[0], self.values[1], self.values[2]);
        if m0.abs() > tol {
            return Err(Error::Inadmissible(format!("|mu_0| = {:e} exceeds {tol:e}", m0.abs())));
        }
        if m2.abs() > tol {
            return Err(Error::Inadmissible(format!("|mu_2| = {:e} exceeds {tol:e}", m2.abs())));
        }
        if m1.abs() <= tol {
            return Err(Error::Inadmissible(format!(
                "|mu_1| = {:e} is not above {tol:e}",
                m1.abs()
            )));
        }
        Ok(())
    }
}

/// `μ_l = E[φ(ρ) He_l(ρ)] / √(l!)` by Gauss–Hermite quadrature.
pub fn hermite_coeffs(
    activation: &Activation,
    order: usize,
    nodes: usize,
    mode: Admissibility,
) -> Result<HermiteCoeffs> {
    if order < 3 {
        return Err(Error::Config(format!("Hermite order must be >= 3, got {order}")));
    }
    if nodes < 4 * order {
        return Err(Error::Config(format!(
            "need at least 4L = {} quadrature nodes, got {nodes}",
            4 * order
        )));
    }
    let gh = GaussHermite::new(nodes);
    let mut values = vec![0.0; order + 1];
    let mut second_moment = 0.0;
    for (&x, &w) in gh.nodes().iter().zip(gh.weights()) {
        let phi = activation.apply(x);
        second_moment += w * phi * phi;
        for (v, h) in values.iter_mut().zip(normalized_hermite(x, order)) {
            *v += w * phi * h;
        }
    }
    let coeffs = HermiteCoeffs {
        values,
        order,
        quadrature_nodes: nodes,
        second_moment,
    };
    if mode == Admissibility::Strict {
        coeffs.check_admissible(ADMISSIBILITY_TOL)?;
    }
    Ok(coeffs)
}

/// Frozen random first layer `V` together with the activation.
#[derive(Debug, Clone)]
pub struct FeatureMap {
    weights: DMatrix<f64>,
    activation: Activation,
    hermite: HermiteCoeffs,
    seed: u64,
}

/// `V_ij ~ N(0, 1/d)` i.i.d., tanh activation.
pub fn init_features(p: usize, d: usize, seed: u64) -> Result<FeatureMap> {
    init_features_with(p, d, Activation::Tanh, seed)
}

pub fn init_features_with(p: usize, d: usize, activation: Activation, seed: u64) -> Result<FeatureMap> {
    if p < 1 || d < 1 {
        return Err(Error::Config(format!("feature map needs p, d >= 1 (p = {p}, d = {d})")));
    }
    let mut rng = rng::seeded(seed, stream::FEATURES);
    let scale = 1.0 / (d as f64).sqrt();
    let weights = rng::gaussian_matrix(&mut rng, p, d) * scale;
    FeatureMap::new(weights, activation, seed)
}

impl FeatureMap {
    pub fn new(weights: DMatrix<f64>, activation: Activation, seed: u64) -> Result<Self> {
        let hermite = hermite_coeffs(
            &activation,
            DEFAULT_HERMITE_ORDER,
            DEFAULT_QUADRATURE_NODES,
            Admissibility::Lenient,
        )?;
        Ok(Self {
            weights,
            activation,
            hermite,
            seed,
        })
    }

    pub fn weights(&self) -> &DMatrix<f64> {
        &self.weights
    }

    pub fn activation(&self) -> &Activation {
        &self.activation
    }

    pub fn hermite(&self) -> &HermiteCoeffs {
        &self.hermite
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Number of features `p`.
    pub fn width(&self) -> usize {
        self.weights.nrows()
    }

    /// Input dimension `d`.
    pub fn input_dim(&self) -> usize {
        self.weights.ncols()
    }

    /// `φ(Vx)` for a single input.
    pub fn featurize(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        check_len("featurize input", self.input_dim(), x.len())?;
        let mut z = &self.weights * x;
        z.apply(|v| *v = self.activation.apply(*v));
        Ok(z)
    }

    /// Feature matrix `Φ` with rows `φ(Vx_i)` for the rows of `x`.
    pub fn features(&self, x: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        check_len("feature inputs", self.input_dim(), x.ncols())?;
        let mut phi = x * self.weights.transpose();
        phi.apply(|v| *v = self.activation.apply(*v));
        Ok(phi)
    }
}

/// Kernel `K = ΦΦᵀ`, exactly symmetric.
pub fn kernel(fm: &FeatureMap, ds: &Dataset) -> Result<DMatrix<f64>> {
    let phi = fm.features(ds.inputs())?;
    Ok(gram_rows(&phi))
}

pub(crate) fn gram_rows(phi: &DMatrix<f64>) -> DMatrix<f64> {
    let mut k = phi * phi.transpose();
    let n = k.nrows();
    for i in 0..n {
        for j in 0..i {
            k[(i, j)] = k[(j, i)];
        }
    }
    k
}

/// Training design: feature matrix, labels and per-sample feature norms.
#[derive(Debug, Clone)]
pub struct Design {
    phi: DMatrix<f64>,
    y: DVector<f64>,
    row_norms: DVector<f64>,
}

impl Design {
    pub fn new(fm: &FeatureMap, ds: &Dataset) -> Result<Self> {
        Self::from_parts(fm.features(ds.inputs())?, ds.labels().clone())
    }

    pub fn from_parts(phi: DMatrix<f64>, y: DVector<f64>) -> Result<Self> {
        check_len("design labels", phi.nrows(), y.len())?;
        let row_norms = DVector::from_fn(phi.nrows(), |i, _| phi.row(i).norm());
        Ok(Self { phi, y, row_norms })
    }

    pub fn phi(&self) -> &DMatrix<f64> {
        &self.phi
    }

    pub fn labels(&self) -> &DVector<f64> {
        &self.y
    }

    pub fn row_norms(&self) -> &DVector<f64> {
        &self.row_norms
    }

    /// Number of training samples `n`.
    pub fn samples(&self) -> usize {
        self.phi.nrows()
    }

    /// Number of parameters `p`.
    pub fn width(&self) -> usize {
        self.phi.ncols()
    }

    /// Residuals `Φθ − Y`.
    pub fn residuals(&self, theta: &DVector<f64>) -> DVector<f64> {
        &self.phi * theta - &self.y
    }

    /// Quadratic training loss `(1/n) Σ (φ_i·θ − y_i)²`.
    pub fn train_loss(&self, theta: &DVector<f64>) -> f64 {
        self.residuals(theta).norm_squared() / self.samples() as f64
    }

    /// Largest eigenvalue of `K = ΦΦᵀ`, from the smaller of the two Gram matrices.
    pub fn kernel_lambda_max(&self) -> f64 {
        let gram = if self.samples() <= self.width() {
            gram_rows(&self.phi)
        } else {
            gram_rows(&self.phi.transpose())
        };
        gram.symmetric_eigenvalues().max()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sample_data_rejects_bad_shapes() {
        assert!(sample_data(0, 3, 1).is_err());
        assert!(sample_data(3, 1, 1).is_err());
    }

    #[test]
    fn labels_are_signs_of_teacher_scores() {
        let ds = sample_data(50, 5, 4).unwrap();
        let u = ds.teacher().unwrap();
        for i in 0..ds.len() {
            let score = ds.inputs().row(i).transpose().dot(u);
            assert_eq!(ds.labels()[i], sign_label(score));
        }
    }

    #[test]
    fn hermite_activation_reproduces_its_coefficients() {
        let c = vec![0.0, 0.8, 0.0, -0.3, 0.1];
        let h = hermite_coeffs(&Activation::Hermite(c.clone()), 6, 40, Admissibility::Strict).unwrap();
        for (l, want) in c.iter().enumerate() {
            assert!((h.mu(l) - want).abs() < 1e-12, "mu_{l}");
        }
        assert!(h.mu(5).abs() < 1e-12 && h.mu(6).abs() < 1e-12);
    }

    #[test]
    fn relu_fails_strict_mode() {
        let err = hermite_coeffs(&Activation::Relu, 6, 200, Admissibility::Strict).unwrap_err();
        assert!(matches!(err, Error::Inadmissible(_)));
        assert!(hermite_coeffs(&Activation::Relu, 6, 200, Admissibility::Lenient).is_ok());
    }

    #[test]
    fn even_polynomial_fails_on_mu1() {
        let act = Activation::Hermite(vec![0.0, 0.0, 0.0, 0.0, 1.0]);
        let err = hermite_coeffs(&act, 4, 16, Admissibility::Strict).unwrap_err();
        assert!(err.to_string().contains("mu_1"));
    }

    #[test]
    fn hermite_preconditions() {
        assert!(hermite_coeffs(&Activation::Tanh, 2, 200, Admissibility::Lenient).is_err());
        assert!(hermite_coeffs(&Activation::Tanh, 12, 47, Admissibility::Lenient).is_err());
        assert!(hermite_coeffs(&Activation::Tanh, 12, 48, Admissibility::Lenient).is_ok());
    }

    #[test]
    fn featurize_checks_dimension() {
        let fm = init_features(4, 3, 0).unwrap();
        let err = fm.featurize(&DVector::zeros(2)).unwrap_err();
        assert!(matches!(err, Error::DimensionMismatch { .. }));
    }

    #[test]
    fn csv_has_header_and_rows() {
        let ds = sample_data(3, 2, 9).unwrap();
        let mut buf = Vec::new();
        ds.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<_> = text.lines().collect();
        assert_eq!(lines[0], "x_1,x_2,y");
        assert_eq!(lines.len(), 4);
        assert_eq!(lines[1].split(',').count(), 3);
    }
}
