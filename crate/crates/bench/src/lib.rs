//! Shared fixtures for the criterion benchmarks.

use dpflow_core::rf_model::{init_features, sample_data};
use dpflow_core::{Dataset, Design, FeatureMap};
use nalgebra::DVector;

pub struct Fixture {
    pub data: Dataset,
    pub features: FeatureMap,
    pub design: Design,
}

impl Fixture {
    pub fn new(n: usize, d: usize, p: usize, seed: u64) -> Self {
        let data = sample_data(n, d, seed).expect("valid fixture shape");
        let features = init_features(p, d, seed).expect("valid fixture shape");
        let design = Design::new(&features, &data).expect("matching dimensions");
        Self { data, features, design }
    }

    pub fn zero_theta(&self) -> DVector<f64> {
        DVector::zeros(self.features.width())
    }
}
