use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::privacy::PrivacyBudget;
use crate::rf_model::Activation;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Task {
    #[serde(rename = "sweep_p")]
    SweepP,
    #[serde(rename = "sweep_T")]
    SweepT,
    #[serde(rename = "grid_clip_T")]
    GridClipT,
    #[serde(rename = "collapse")]
    Collapse,
    #[serde(rename = "calibrate")]
    Calibrate,
    #[serde(rename = "diagnose")]
    Diagnose,
}

impl Task {
    pub const ALL: [Task; 6] = [
        Task::SweepP,
        Task::SweepT,
        Task::GridClipT,
        Task::Collapse,
        Task::Calibrate,
        Task::Diagnose,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Task::SweepP => "sweep_p",
            Task::SweepT => "sweep_T",
            Task::GridClipT => "grid_clip_T",
            Task::Collapse => "collapse",
            Task::Calibrate => "calibrate",
            Task::Diagnose => "diagnose",
        }
    }
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Task {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Task::ALL
            .into_iter()
            .find(|t| t.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown task {s:?}")))
    }
}

/// How the non-private baseline `θ*` is obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Baseline {
    /// Minimum-norm interpolator `Φ⁺Y` from the thin SVD.
    ClosedForm,
    /// GD until `‖Φθ − Y‖ ≤ 1e−6 ‖Y‖` or `gd_max_steps`.
    Iterative,
    /// GD with the same step size and step count as the private run.
    Matched,
}

/// Experiment description. Every field has a default; a JSON file only needs
/// the keys it changes. Sweep axes left unset take task-specific defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub task: Task,
    pub n: usize,
    pub d: usize,
    pub p_list: Option<Vec<usize>>,
    #[serde(rename = "T_list")]
    pub t_list: Option<Vec<usize>>,
    /// Clipping constants in units of `√p`.
    pub clip_list: Vec<f64>,
    pub epsilon: f64,
    /// Defaults to `1/n`.
    pub delta: Option<f64>,
    /// Fixed step size; defaults to `eta_factor · n / (2 λ_max(K))`.
    pub eta: Option<f64>,
    pub eta_factor: f64,
    pub seeds: Vec<u64>,
    pub test_count: usize,
    pub validation_count: usize,
    /// Clipping constant in units of `√p` for `sweep_p`, `sweep_T` and `collapse`.
    pub clip_scale: f64,
    /// Candidate horizons `τ = κ d / p` for `sweep_p`, picked on validation data.
    pub tau_scales: Vec<f64>,
    pub baseline: Baseline,
    pub gd_max_steps: usize,
    pub force_sigma_zero: bool,
    pub disable_clipping: bool,
    pub activation: Activation,
    pub output_dir: PathBuf,
    /// Worker threads; defaults to the available parallelism.
    pub workers: Option<usize>,
    /// Grid points for the collapse comparison.
    pub collapse_grid: usize,
    /// Treat a divergent run as a failure instead of a flagged row.
    pub fail_on_divergence: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            task: Task::SweepP,
            n: 500,
            d: 50,
            p_list: None,
            t_list: None,
            clip_list: vec![0.01, 0.1, 1.0, 10.0, 100.0],
            epsilon: 4.0,
            delta: None,
            eta: None,
            eta_factor: 0.1,
            seeds: (0..5).collect(),
            test_count: 20_000,
            validation_count: 5_000,
            clip_scale: 0.5,
            tau_scales: vec![1.0, 2.0, 4.0, 8.0, 16.0, 32.0],
            baseline: Baseline::ClosedForm,
            gd_max_steps: 200_000,
            force_sigma_zero: false,
            disable_clipping: false,
            activation: Activation::Tanh,
            output_dir: PathBuf::from("out"),
            workers: None,
            collapse_grid: 25,
            fail_on_divergence: false,
        }
    }
}

/// `T ∈ {0} ∪ {round(2^{k/2}) : k = 2..=17}`.
pub fn default_t_sweep() -> Vec<usize> {
    std::iter::once(0)
        .chain((2..=17).map(|k| 2f64.powf(k as f64 / 2.0).round() as usize))
        .collect()
}

impl ExperimentConfig {
    pub fn for_task(task: Task) -> Self {
        Self {
            task,
            ..Self::default()
        }
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(s)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        Self::from_json_str(&std::fs::read_to_string(path)?)
    }

    pub fn p_values(&self) -> Vec<usize> {
        self.p_list.clone().unwrap_or_else(|| match self.task {
            Task::SweepP => vec![100, 250, 500, 1000, 2000, 5000],
            Task::SweepT | Task::Collapse => vec![2000, 5000],
            Task::GridClipT | Task::Calibrate | Task::Diagnose => vec![2000],
        })
    }

    pub fn t_values(&self) -> Vec<usize> {
        self.t_list.clone().unwrap_or_else(|| match self.task {
            Task::GridClipT => vec![1, 10, 100, 1000],
            _ => default_t_sweep(),
        })
    }

    pub fn delta_value(&self) -> f64 {
        self.delta.unwrap_or(1.0 / self.n as f64)
    }

    pub fn budget(&self) -> Result<PrivacyBudget> {
        PrivacyBudget::new(self.epsilon, self.delta_value())
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.to_string()));
        if self.n < 2 || self.d < 2 {
            return bad("n and d must be >= 2");
        }
        let ps = self.p_values();
        if ps.is_empty() || ps.contains(&0) {
            return bad("p_list must be nonempty with positive entries");
        }
        if self.t_values().is_empty() {
            return bad("T_list must be nonempty");
        }
        if self.clip_list.is_empty() || self.clip_list.iter().any(|c| !(*c > 0.0)) {
            return bad("clip_list must be nonempty with positive entries");
        }
        if self.tau_scales.is_empty() || self.tau_scales.iter().any(|c| !(*c > 0.0)) {
            return bad("tau_scales must be nonempty with positive entries");
        }
        if self.seeds.is_empty() {
            return bad("seeds must be nonempty");
        }
        if self.eta.is_some_and(|e| !(e > 0.0)) || !(self.eta_factor > 0.0) {
            return bad("step size must be positive");
        }
        if !(self.clip_scale > 0.0) {
            return bad("clip_scale must be positive");
        }
        if self.test_count < crate::ou_gf::MIN_TEST_COUNT || self.validation_count < 1 {
            return bad("test_count must be >= 100 and validation_count >= 1");
        }
        if self.disable_clipping && !self.force_sigma_zero {
            return bad("disable_clipping requires force_sigma_zero: noise calibrated to an infinite clipping constant is infinite");
        }
        if self.workers == Some(0) {
            return bad("workers must be positive");
        }
        if self.collapse_grid < 2 {
            return bad("collapse_grid must be >= 2");
        }
        if self.task == Task::GridClipT && ps.len() != 1 {
            return bad("grid_clip_T takes exactly one value in p_list");
        }
        if self.task == Task::Diagnose && self.n <= self.d {
            return bad("diagnose needs n > d");
        }
        self.budget()?;
        Ok(())
    }
}
