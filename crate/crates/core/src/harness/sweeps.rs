use nalgebra::DVector;
use rayon::prelude::*;
use serde::Serialize;

use crate::diagnostics::{clip_free_certificate, regime_check, spectrum_report, RegimeReport, SpectrumReport};
use crate::dp_gd::{descent_step, run_dp_gd, run_gd, steps_for, ClipBound, DpGdConfig};
use crate::error::{Error, Result};
use crate::ou_gf::{decompose, paired_report, LossEstimate, RiskReport, TestSet};
use crate::privacy::{calibrate_sigma, paper_hyperparams, verify_tail, PaperHyperparams, PrivacyBudget};
use crate::rf_model::{init_features_with, sample_data, Dataset, Design, FeatureMap};
use crate::rng::{self, stream};

use super::config::{Baseline, ExperimentConfig};

/// One training problem: data, features and design for a `(p, seed)` pair.
#[derive(Debug, Clone)]
pub struct Instance {
    pub p: usize,
    pub seed: u64,
    pub data: Dataset,
    pub features: FeatureMap,
    pub design: Design,
    pub lambda_max: f64,
}

impl Instance {
    pub fn build(cfg: &ExperimentConfig, p: usize, seed: u64) -> Result<Self> {
        let data = sample_data(cfg.n, cfg.d, seed)?;
        let features = init_features_with(p, cfg.d, cfg.activation.clone(), seed)?;
        let design = Design::new(&features, &data)?;
        let lambda_max = design.kernel_lambda_max();
        Ok(Self {
            p,
            seed,
            data,
            features,
            design,
            lambda_max,
        })
    }

    /// `n / (2 λ_max(K))`: the step size at which GD is critically damped on the top mode.
    pub fn eta_unit(&self) -> f64 {
        self.design.samples() as f64 / (2.0 * self.lambda_max)
    }

    pub fn teacher(&self) -> &DVector<f64> {
        self.data.teacher().expect("synthetic data carries its teacher")
    }

    pub fn test_set(&self, m: usize) -> Result<TestSet> {
        TestSet::sample(m, self.teacher(), self.seed, stream::TEST)
    }
}

/// Stream id of the `j`-th training run on a width-`p` instance.
pub fn noise_stream(p: usize, j: usize) -> u64 {
    stream::NOISE + ((p as u64) << 12) + j as u64
}

/// Runs `f` over `items` on the configured worker pool, preserving order.
pub(crate) fn parallel_map<I, T, F>(cfg: &ExperimentConfig, items: Vec<I>, f: F) -> Result<Vec<T>>
where
    I: Send,
    T: Send,
    F: Fn(I) -> Result<T> + Sync + Send,
{
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(w) = cfg.workers {
        builder = builder.num_threads(w);
    }
    let pool = builder
        .build()
        .map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))?;
    pool.install(|| items.into_par_iter().map(f).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RowStatus {
    Ok,
    Diverged,
}

impl RowStatus {
    pub fn name(&self) -> &'static str {
        match self {
            RowStatus::Ok => "ok",
            RowStatus::Diverged => "diverged",
        }
    }
}

/// One DP-GD run with its privacy audit.
#[derive(Debug, Clone)]
pub struct PrivateRun {
    pub steps: usize,
    pub eta: f64,
    pub eta_t: f64,
    pub c_clip: f64,
    pub sigma: f64,
    pub tail_ok: bool,
    pub clip_fraction: f64,
    /// `None` when the run diverged.
    pub theta: Option<DVector<f64>>,
}

impl PrivateRun {
    pub fn status(&self) -> RowStatus {
        if self.theta.is_some() {
            RowStatus::Ok
        } else {
            RowStatus::Diverged
        }
    }
}

/// Runs DP-GD for `steps` steps with σ calibrated to the realized `ηT`
/// (zero when `force_sigma_zero`). `T = 0` returns the initialization.
pub fn private_run(
    cfg: &ExperimentConfig,
    budget: &PrivacyBudget,
    inst: &Instance,
    eta: f64,
    c_clip: f64,
    steps: usize,
    stream_id: u64,
) -> Result<PrivateRun> {
    let eta_t = eta * steps as f64;
    let sigma = if cfg.force_sigma_zero {
        0.0
    } else {
        calibrate_sigma(budget, eta_t)?
    };
    let clip = if cfg.disable_clipping {
        ClipBound::Never
    } else {
        ClipBound::Finite(c_clip)
    };
    let tail_ok = verify_tail(budget, eta, sigma, steps).passed;
    let mut run = PrivateRun {
        steps,
        eta,
        eta_t,
        c_clip: clip.value(),
        sigma,
        tail_ok,
        clip_fraction: 0.0,
        theta: None,
    };
    if steps == 0 {
        run.theta = Some(DVector::zeros(inst.p));
        return Ok(run);
    }
    let dp = DpGdConfig::new(eta, steps, clip, sigma);
    let mut r = rng::seeded(inst.seed, stream_id);
    match run_dp_gd(&dp, &inst.design, &mut r) {
        Ok(traj) => {
            run.clip_fraction = traj.clip_fraction();
            run.theta = Some(traj.final_theta().clone());
        }
        Err(Error::Divergence { .. }) if !cfg.fail_on_divergence => {}
        Err(e) => return Err(e),
    }
    Ok(run)
}

/// Non-private reference parameters.
pub fn baseline_theta(
    cfg: &ExperimentConfig,
    inst: &Instance,
    eta: f64,
    matched_steps: usize,
) -> Result<(DVector<f64>, bool)> {
    match cfg.baseline {
        Baseline::ClosedForm => Ok((
            decompose(&inst.design)?.pseudo_inverse_apply(inst.design.labels())?,
            true,
        )),
        Baseline::Matched => {
            if matched_steps == 0 {
                return Ok((DVector::zeros(inst.p), true));
            }
            let traj = run_gd(
                &DpGdConfig::new(eta, matched_steps, ClipBound::Never, 0.0),
                &inst.design,
            )?;
            Ok((traj.final_theta().clone(), true))
        }
        Baseline::Iterative => {
            let target = 1e-6 * inst.design.labels().norm();
            let mut theta = DVector::zeros(inst.p);
            for _ in 0..cfg.gd_max_steps {
                if inst.design.residuals(&theta).norm() <= target {
                    return Ok((theta, true));
                }
                theta = descent_step(&inst.design, &theta, eta, ClipBound::Never).0;
            }
            let converged = inst.design.residuals(&theta).norm() <= target;
            Ok((theta, converged))
        }
    }
}

fn resolve_eta(cfg: &ExperimentConfig, unit: f64) -> f64 {
    cfg.eta.unwrap_or(cfg.eta_factor * unit)
}

fn nan_estimate() -> LossEstimate {
    LossEstimate {
        mean: f64::NAN,
        stderr: f64::NAN,
    }
}

// ---------------------------------------------------------------- sweep_p

#[derive(Debug, Clone)]
pub struct SweepPRow {
    pub p: usize,
    pub seed: u64,
    pub tau_scale: f64,
    pub tau: f64,
    pub run: PrivateRun,
    pub validation_loss: f64,
    pub risk: RiskReport,
    pub baseline_converged: bool,
}

/// For each `(p, seed)`: the non-private baseline and DP-GD with `C = clip_scale·√p`
/// and `τ = κ d/p`, `κ` chosen among `tau_scales` by validation loss.
pub fn sweep_p(cfg: &ExperimentConfig) -> Result<Vec<SweepPRow>> {
    cfg.validate()?;
    let budget = cfg.budget()?;
    let jobs: Vec<(usize, u64)> = cfg
        .p_values()
        .into_iter()
        .flat_map(|p| cfg.seeds.iter().map(move |&s| (p, s)))
        .collect();
    parallel_map(cfg, jobs, |(p, seed)| sweep_p_job(cfg, &budget, p, seed))
}

fn sweep_p_job(cfg: &ExperimentConfig, budget: &PrivacyBudget, p: usize, seed: u64) -> Result<SweepPRow> {
    let inst = Instance::build(cfg, p, seed)?;
    let eta = resolve_eta(cfg, inst.eta_unit());
    let c_clip = cfg.clip_scale * (p as f64).sqrt();
    let mut runs = Vec::with_capacity(cfg.tau_scales.len());
    for (j, &kappa) in cfg.tau_scales.iter().enumerate() {
        let tau = kappa * cfg.d as f64 / p as f64;
        let steps = steps_for(tau, eta);
        runs.push((
            kappa,
            tau,
            private_run(cfg, budget, &inst, eta, c_clip, steps, noise_stream(p, j))?,
        ));
    }
    let validation = TestSet::sample(cfg.validation_count, inst.teacher(), seed, stream::VALIDATION)?;
    let thetas: Vec<&DVector<f64>> = runs.iter().filter_map(|r| r.2.theta.as_ref()).collect();
    let losses = validation.losses(&inst.features, &thetas)?;
    let mut scored = losses.iter();
    let mut best: Option<(usize, f64)> = None;
    for (j, r) in runs.iter().enumerate() {
        if r.2.theta.is_some() {
            let l = scored.next().expect("one loss per finished run").mean;
            if best.is_none_or(|(_, b)| l < b) {
                best = Some((j, l));
            }
        }
    }
    let (pick, validation_loss) = best.unwrap_or((runs.len() - 1, f64::NAN));
    let (tau_scale, tau, run) = runs.swap_remove(pick);
    let (theta_star, baseline_converged) = baseline_theta(cfg, &inst, eta, run.steps)?;
    let risk = match &run.theta {
        Some(theta_p) => paired_report(
            &inst.test_set(cfg.test_count)?,
            &inst.features,
            theta_p,
            &theta_star,
            seed,
        )?,
        None => {
            let test = inst.test_set(cfg.test_count)?;
            let base = test.losses(&inst.features, &[&theta_star])?[0];
            RiskReport {
                risk_private: nan_estimate(),
                risk_baseline: base,
                excess: f64::NAN,
                excess_stderr: f64::NAN,
                test_count: cfg.test_count,
                seed,
            }
        }
    };
    Ok(SweepPRow {
        p,
        seed,
        tau_scale,
        tau,
        run,
        validation_loss,
        risk,
        baseline_converged,
    })
}

// ---------------------------------------------------------------- sweep_T

#[derive(Debug, Clone)]
pub struct SweepTRow {
    pub p: usize,
    pub seed: u64,
    pub run: PrivateRun,
    pub test: LossEstimate,
}

#[derive(Debug, Clone)]
pub struct SweepT {
    /// Step size shared by every run.
    pub eta: f64,
    pub rows: Vec<SweepTRow>,
}

/// Smallest `n / (2 λ_max(K))` over all `(p, seed)` instances.
fn shared_eta_unit(cfg: &ExperimentConfig, ps: &[usize]) -> Result<f64> {
    let jobs: Vec<(usize, u64)> = ps
        .iter()
        .flat_map(|&p| cfg.seeds.iter().map(move |&s| (p, s)))
        .collect();
    let units = parallel_map(cfg, jobs, |(p, s)| Instance::build(cfg, p, s).map(|i| i.eta_unit()))?;
    Ok(units.into_iter().fold(f64::INFINITY, f64::min))
}

fn shared_eta(cfg: &ExperimentConfig, ps: &[usize]) -> Result<f64> {
    match cfg.eta {
        Some(e) => Ok(e),
        None => Ok(cfg.eta_factor * shared_eta_unit(cfg, ps)?),
    }
}

/// Test loss of DP-GD against the iteration count, one shared step size,
/// `C = clip_scale·√p` and σ recalibrated for every `T`.
pub fn sweep_t(cfg: &ExperimentConfig) -> Result<SweepT> {
    cfg.validate()?;
    let budget = cfg.budget()?;
    let ps = cfg.p_values();
    let eta = shared_eta(cfg, &ps)?;
    let ts = cfg.t_values();
    let jobs: Vec<(usize, u64)> = ps
        .iter()
        .flat_map(|&p| cfg.seeds.iter().map(move |&s| (p, s)))
        .collect();
    let nested = parallel_map(cfg, jobs, |(p, seed)| {
        let inst = Instance::build(cfg, p, seed)?;
        let c_clip = cfg.clip_scale * (p as f64).sqrt();
        let runs = ts
            .iter()
            .enumerate()
            .map(|(j, &t)| private_run(cfg, &budget, &inst, eta, c_clip, t, noise_stream(p, j)))
            .collect::<Result<Vec<_>>>()?;
        score_runs(cfg, &inst, runs)
    })?;
    Ok(SweepT {
        eta,
        rows: nested.into_iter().flatten().collect(),
    })
}

fn score_runs(cfg: &ExperimentConfig, inst: &Instance, runs: Vec<PrivateRun>) -> Result<Vec<SweepTRow>> {
    let test = inst.test_set(cfg.test_count)?;
    let thetas: Vec<&DVector<f64>> = runs.iter().filter_map(|r| r.theta.as_ref()).collect();
    let mut losses = test.losses(&inst.features, &thetas)?.into_iter();
    Ok(runs
        .into_iter()
        .map(|run| {
            let test = if run.theta.is_some() {
                losses.next().expect("one loss per finished run")
            } else {
                nan_estimate()
            };
            SweepTRow {
                p: inst.p,
                seed: inst.seed,
                run,
                test,
            }
        })
        .collect())
}

/// Mean and across-seed standard error of the test loss for each `(p, T)`,
/// ignoring diverged runs. Sorted by `(p, T)`.
pub fn sweep_t_means(rows: &[SweepTRow]) -> Vec<(usize, usize, LossEstimate, usize)> {
    let mut keys: Vec<(usize, usize)> = rows.iter().map(|r| (r.p, r.run.steps)).collect();
    keys.sort_unstable();
    keys.dedup();
    keys.into_iter()
        .map(|(p, t)| {
            let vals: Vec<f64> = rows
                .iter()
                .filter(|r| r.p == p && r.run.steps == t && r.test.mean.is_finite())
                .map(|r| r.test.mean)
                .collect();
            let count = vals.len();
            let est = if count == 0 {
                nan_estimate()
            } else {
                LossEstimate::from_samples(vals)
            };
            (p, t, est, count)
        })
        .collect()
}

/// `T` minimizing the mean test loss for each width.
pub fn optimal_steps(rows: &[SweepTRow]) -> Vec<(usize, usize, f64)> {
    let means = sweep_t_means(rows);
    let mut ps: Vec<usize> = means.iter().map(|m| m.0).collect();
    ps.dedup();
    ps.into_iter()
        .map(|p| {
            let (_, t, est, _) = means
                .iter()
                .filter(|m| m.0 == p && m.2.mean.is_finite())
                .min_by(|a, b| a.2.mean.total_cmp(&b.2.mean))
                .copied()
                .unwrap_or((p, 0, nan_estimate(), 0));
            (p, t, est.mean)
        })
        .collect()
}

// ---------------------------------------------------------------- collapse

/// `(T, ηTp/d, ηTd/p, mean loss)`.
pub type CollapsePoint = (usize, f64, f64, f64);

#[derive(Debug, Clone, Serialize)]
pub struct CollapseResult {
    pub eta: f64,
    /// Largest spread between width curves against `ηTp/d`.
    pub discrepancy: f64,
    /// Same measure against the control abscissa `ηTd/p`.
    pub control_discrepancy: f64,
    /// Per width: `(T, ηTp/d, ηTd/p, mean loss)` for `T ≥ 1`.
    pub curves: Vec<(usize, Vec<CollapsePoint>)>,
}

/// Largest vertical spread between curves on a common grid, interpolating
/// linearly in `log x` over the range every curve covers. Zero for fewer than
/// two curves, infinite when the ranges do not overlap.
pub fn max_discrepancy(curves: &[Vec<(f64, f64)>], grid: usize) -> f64 {
    if curves.len() < 2 {
        return 0.0;
    }
    let logs: Vec<Vec<(f64, f64)>> = curves
        .iter()
        .map(|c| {
            let mut v: Vec<(f64, f64)> = c
                .iter()
                .filter(|(x, y)| *x > 0.0 && y.is_finite())
                .map(|&(x, y)| (x.ln(), y))
                .collect();
            v.sort_by(|a, b| a.0.total_cmp(&b.0));
            v
        })
        .collect();
    if logs.iter().any(|c| c.len() < 2) {
        return f64::INFINITY;
    }
    let lo = logs.iter().map(|c| c[0].0).fold(f64::NEG_INFINITY, f64::max);
    let hi = logs.iter().map(|c| c[c.len() - 1].0).fold(f64::INFINITY, f64::min);
    if !(hi > lo) {
        return f64::INFINITY;
    }
    let interp = |c: &[(f64, f64)], x: f64| -> f64 {
        let k = c.partition_point(|pt| pt.0 < x).clamp(1, c.len() - 1);
        let (a, b) = (c[k - 1], c[k]);
        if b.0 == a.0 {
            return a.1;
        }
        a.1 + (b.1 - a.1) * (x - a.0) / (b.0 - a.0)
    };
    (0..grid)
        .map(|g| {
            let x = lo + (hi - lo) * g as f64 / (grid - 1) as f64;
            let ys: Vec<f64> = logs.iter().map(|c| interp(c, x)).collect();
            let max = ys.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let min = ys.iter().copied().fold(f64::INFINITY, f64::min);
            max - min
        })
        .fold(0.0, f64::max)
}

pub fn collapse_analysis(cfg: &ExperimentConfig, sweep: &SweepT) -> CollapseResult {
    let d = cfg.d as f64;
    let means = sweep_t_means(&sweep.rows);
    let mut ps: Vec<usize> = means.iter().map(|m| m.0).collect();
    ps.dedup();
    let curves: Vec<(usize, Vec<CollapsePoint>)> = ps
        .iter()
        .map(|&p| {
            let pts = means
                .iter()
                .filter(|m| m.0 == p && m.1 > 0)
                .map(|&(_, t, est, _)| {
                    let et = sweep.eta * t as f64;
                    (t, et * p as f64 / d, et * d / p as f64, est.mean)
                })
                .collect();
            (p, pts)
        })
        .collect();
    let main: Vec<Vec<(f64, f64)>> = curves
        .iter()
        .map(|(_, c)| c.iter().map(|q| (q.1, q.3)).collect())
        .collect();
    let control: Vec<Vec<(f64, f64)>> = curves
        .iter()
        .map(|(_, c)| c.iter().map(|q| (q.2, q.3)).collect())
        .collect();
    CollapseResult {
        eta: sweep.eta,
        discrepancy: max_discrepancy(&main, cfg.collapse_grid),
        control_discrepancy: max_discrepancy(&control, cfg.collapse_grid),
        curves,
    }
}

// ---------------------------------------------------------------- grid_clip_T

#[derive(Debug, Clone)]
pub struct GridRow {
    /// Clipping constant in units of `√p`.
    pub clip_rel: f64,
    pub row: SweepTRow,
}

#[derive(Debug, Clone)]
pub struct Grid {
    pub p: usize,
    pub eta: f64,
    pub clip_list: Vec<f64>,
    pub t_list: Vec<usize>,
    pub rows: Vec<GridRow>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Corners {
    pub bottom_left: f64,
    pub bottom_right: f64,
    pub top_left: f64,
    pub top_right: f64,
}

impl Grid {
    /// Seed-averaged loss; `[T index][clip index]`.
    pub fn cell_means(&self) -> Vec<Vec<f64>> {
        self.t_list
            .iter()
            .map(|&t| {
                self.clip_list
                    .iter()
                    .map(|&c| {
                        let vals: Vec<f64> = self
                            .rows
                            .iter()
                            .filter(|r| r.clip_rel == c && r.row.run.steps == t && r.row.test.mean.is_finite())
                            .map(|r| r.row.test.mean)
                            .collect();
                        if vals.is_empty() {
                            f64::NAN
                        } else {
                            vals.iter().sum::<f64>() / vals.len() as f64
                        }
                    })
                    .collect()
            })
            .collect()
    }

    /// Horizontal axis: clipping constant; vertical axis: iteration count,
    /// both increasing away from the bottom-left corner.
    pub fn corners(&self) -> Corners {
        let m = self.cell_means();
        let (last_t, last_c) = (m.len() - 1, m[0].len() - 1);
        Corners {
            bottom_left: m[0][0],
            bottom_right: m[0][last_c],
            top_left: m[last_t][0],
            top_right: m[last_t][last_c],
        }
    }
}

/// Test loss over a grid of clipping constants (units of `√p`) and iteration counts.
pub fn grid_clip_t(cfg: &ExperimentConfig) -> Result<Grid> {
    cfg.validate()?;
    let budget = cfg.budget()?;
    let p = cfg.p_values()[0];
    let eta = shared_eta(cfg, &[p])?;
    let ts = cfg.t_values();
    let clips = cfg.clip_list.clone();
    let nested = parallel_map(cfg, cfg.seeds.clone(), |seed| {
        let inst = Instance::build(cfg, p, seed)?;
        let mut runs = Vec::new();
        let mut rel = Vec::new();
        for (ci, &c) in clips.iter().enumerate() {
            for (ti, &t) in ts.iter().enumerate() {
                let j = ci * ts.len() + ti;
                runs.push(private_run(
                    cfg,
                    &budget,
                    &inst,
                    eta,
                    c * (p as f64).sqrt(),
                    t,
                    noise_stream(p, j),
                )?);
                rel.push(c);
            }
        }
        let scored = score_runs(cfg, &inst, runs)?;
        Ok(rel
            .into_iter()
            .zip(scored)
            .map(|(clip_rel, row)| GridRow { clip_rel, row })
            .collect::<Vec<_>>())
    })?;
    Ok(Grid {
        p,
        eta,
        clip_list: clips,
        t_list: ts,
        rows: nested.into_iter().flatten().collect(),
    })
}

// ---------------------------------------------------------------- diagnose

#[derive(Debug, Clone)]
pub struct DiagnoseRow {
    pub p: usize,
    pub seed: u64,
    pub spectrum: SpectrumReport,
    pub regime: RegimeReport,
    pub hyper: PaperHyperparams,
    pub run: PrivateRun,
    pub clip_free: bool,
    pub worst_margin: f64,
}

/// Kernel spectrum, regime ratios and a clipping-free certificate for DP-GD
/// run with the default hyper-parameters `τ = d ln²n/p`, `C = √p ln²n`.
pub fn diagnose(cfg: &ExperimentConfig) -> Result<Vec<DiagnoseRow>> {
    cfg.validate()?;
    let budget = cfg.budget()?;
    let jobs: Vec<(usize, u64)> = cfg
        .p_values()
        .into_iter()
        .flat_map(|p| cfg.seeds.iter().map(move |&s| (p, s)))
        .collect();
    parallel_map(cfg, jobs, |(p, seed)| {
        let inst = Instance::build(cfg, p, seed)?;
        let sd = decompose(&inst.design)?;
        let spectrum = spectrum_report(&sd, cfg.d)?;
        let hyper = paper_hyperparams(cfg.n, cfg.d, p, &budget)?;
        let eta = resolve_eta(cfg, inst.eta_unit());
        let steps = steps_for(hyper.tau, eta).max(1);
        let sigma = if cfg.force_sigma_zero {
            0.0
        } else {
            calibrate_sigma(&budget, eta * steps as f64)?
        };
        let dp = DpGdConfig::new(eta, steps, ClipBound::Finite(hyper.c_clip), sigma);
        let mut r = rng::seeded(seed, noise_stream(p, 0));
        let mut run = PrivateRun {
            steps,
            eta,
            eta_t: eta * steps as f64,
            c_clip: hyper.c_clip,
            sigma,
            tail_ok: verify_tail(&budget, eta, sigma, steps).passed,
            clip_fraction: 0.0,
            theta: None,
        };
        let (clip_free, worst_margin) = match run_dp_gd(&dp, &inst.design, &mut r) {
            Ok(traj) => {
                let cert = clip_free_certificate(&traj, &inst.design, hyper.c_clip)?;
                run.clip_fraction = traj.clip_fraction();
                run.theta = Some(traj.final_theta().clone());
                (cert.clip_free, cert.worst_margin)
            }
            Err(Error::Divergence { .. }) if !cfg.fail_on_divergence => (false, f64::NAN),
            Err(e) => return Err(e),
        };
        Ok(DiagnoseRow {
            p,
            seed,
            spectrum,
            regime: regime_check(cfg.n, cfg.d, p),
            hyper,
            run,
            clip_free,
            worst_margin,
        })
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_curves_have_no_discrepancy() {
        let c: Vec<(f64, f64)> = (1..10).map(|k| (k as f64, 1.0 / k as f64)).collect();
        assert_eq!(max_discrepancy(&[c.clone(), c], 20), 0.0);
    }

    #[test]
    fn shifted_curves_measure_the_shift() {
        let a: Vec<(f64, f64)> = (1..10).map(|k| (k as f64, 1.0)).collect();
        let b: Vec<(f64, f64)> = (1..10).map(|k| (k as f64, 1.25)).collect();
        assert!((max_discrepancy(&[a.clone(), b], 20) - 0.25).abs() < 1e-15);
        assert_eq!(max_discrepancy(&[a], 20), 0.0);
    }

    #[test]
    fn disjoint_ranges_are_infinitely_apart() {
        let a = vec![(1.0, 1.0), (2.0, 1.0)];
        let b = vec![(3.0, 1.0), (4.0, 1.0)];
        assert!(max_discrepancy(&[a, b], 10).is_infinite());
    }

    #[test]
    fn noise_streams_are_distinct() {
        assert_ne!(noise_stream(100, 1), noise_stream(101, 1));
        assert_ne!(noise_stream(100, 1), noise_stream(100, 2));
    }
}
