use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};
use crate::rf_model::{sample_inputs, teacher_labels, FeatureMap};
use crate::rng::{self, stream};

/// Test rows are featurized this many at a time.
const BLOCK: usize = 512;
pub const MIN_TEST_COUNT: usize = 100;

/// Fresh draws from the data law, labeled by the teacher.
#[derive(Debug, Clone)]
pub struct TestSet {
    x: DMatrix<f64>,
    y: DVector<f64>,
}

impl TestSet {
    /// `m` test points from stream `stream_id` of `seed`.
    pub fn sample(m: usize, teacher: &DVector<f64>, seed: u64, stream_id: u64) -> Result<Self> {
        if teacher.len() < 2 {
            return Err(Error::Config("teacher must have dimension >= 2".into()));
        }
        let mut r = rng::seeded(seed, stream_id);
        let x = sample_inputs(&mut r, m, teacher.len());
        let y = teacher_labels(&x, teacher);
        Ok(Self { x, y })
    }

    pub fn inputs(&self) -> &DMatrix<f64> {
        &self.x
    }

    pub fn labels(&self) -> &DVector<f64> {
        &self.y
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    /// Squared losses `(φ(x_j)·θ_k − y_j)²` as an `m × K` matrix.
    pub fn per_sample_losses(&self, fm: &FeatureMap, thetas: &[&DVector<f64>]) -> Result<DMatrix<f64>> {
        for t in thetas {
            check_len("test parameters", fm.width(), t.len())?;
        }
        let m = self.len();
        let mut theta_mat = DMatrix::zeros(fm.width(), thetas.len());
        for (k, t) in thetas.iter().enumerate() {
            theta_mat.set_column(k, t);
        }
        let mut out = DMatrix::zeros(m, thetas.len());
        let mut start = 0;
        while start < m {
            let rows = BLOCK.min(m - start);
            let feats = fm.features(&self.x.rows(start, rows).into_owned())?;
            let preds = feats * &theta_mat;
            for i in 0..rows {
                for k in 0..thetas.len() {
                    let r = preds[(i, k)] - self.y[start + i];
                    out[(start + i, k)] = r * r;
                }
            }
            start += rows;
        }
        Ok(out)
    }

    /// Mean test loss of each parameter vector.
    pub fn losses(&self, fm: &FeatureMap, thetas: &[&DVector<f64>]) -> Result<Vec<LossEstimate>> {
        let l = self.per_sample_losses(fm, thetas)?;
        Ok((0..thetas.len())
            .map(|k| LossEstimate::from_samples(l.column(k).iter().copied()))
            .collect())
    }
}

/// Monte Carlo mean with standard error `std / √m`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossEstimate {
    pub mean: f64,
    pub stderr: f64,
}

impl LossEstimate {
    pub fn from_samples<I: IntoIterator<Item = f64>>(samples: I) -> Self {
        let v: Vec<f64> = samples.into_iter().collect();
        let m = v.len() as f64;
        let mean = v.iter().sum::<f64>() / m;
        let var = if v.len() > 1 {
            v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (m - 1.0)
        } else {
            0.0
        };
        Self {
            mean,
            stderr: (var / m).sqrt(),
        }
    }
}

/// Paired Monte Carlo estimate of the excess population risk.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RiskReport {
    pub risk_private: LossEstimate,
    pub risk_baseline: LossEstimate,
    /// `risk_private.mean − risk_baseline.mean`.
    pub excess: f64,
    /// Standard error of the paired differences.
    pub excess_stderr: f64,
    pub test_count: usize,
    pub seed: u64,
}

impl RiskReport {
    pub const CSV_HEADER: &'static str = "risk_private,stderr_p,risk_baseline,stderr_b,excess,m,seed";

    pub fn csv_row(&self) -> String {
        format!(
            "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{},{}",
            self.risk_private.mean,
            self.risk_private.stderr,
            self.risk_baseline.mean,
            self.risk_baseline.stderr,
            self.excess,
            self.test_count,
            self.seed
        )
    }
}

/// Excess risk of `theta_p` over `theta_star` on `m` fresh test points drawn
/// from the test stream of `seed`. Both vectors are scored on the same points.
pub fn excess_risk(
    theta_p: &DVector<f64>,
    theta_star: &DVector<f64>,
    fm: &FeatureMap,
    teacher: &DVector<f64>,
    m: usize,
    seed: u64,
) -> Result<RiskReport> {
    if m < MIN_TEST_COUNT {
        return Err(Error::Config(format!(
            "test count must be >= {MIN_TEST_COUNT}, got {m}"
        )));
    }
    check_len("teacher dimension", fm.input_dim(), teacher.len())?;
    let test = TestSet::sample(m, teacher, seed, stream::TEST)?;
    paired_report(&test, fm, theta_p, theta_star, seed)
}

/// Paired risk estimate of two parameter vectors on a given test set.
pub fn paired_report(
    test: &TestSet,
    fm: &FeatureMap,
    theta_p: &DVector<f64>,
    theta_star: &DVector<f64>,
    seed: u64,
) -> Result<RiskReport> {
    let m = test.len();
    let l = test.per_sample_losses(fm, &[theta_p, theta_star])?;
    let private = LossEstimate::from_samples(l.column(0).iter().copied());
    let baseline = LossEstimate::from_samples(l.column(1).iter().copied());
    let diff = LossEstimate::from_samples((0..m).map(|i| l[(i, 0)] - l[(i, 1)]));
    Ok(RiskReport {
        risk_private: private,
        risk_baseline: baseline,
        excess: private.mean - baseline.mean,
        excess_stderr: diff.stderr,
        test_count: m,
        seed,
    })
}
