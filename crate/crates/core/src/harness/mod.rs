//! Experiment runner: parameter sweeps over width, iteration count and
//! clipping constant, written as CSV tables, JSON metadata and SVG charts.
//!
//! Every job owns its random streams (keyed by seed, width and run index),
//! so output does not depend on the number of workers. CSV floats are
//! printed with 17 significant digits.

mod config;
pub mod svg;
mod sweeps;

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde_json::json;

pub use config::{default_t_sweep, Baseline, ExperimentConfig, Task};
pub use sweeps::{
    baseline_theta, collapse_analysis, diagnose, grid_clip_t, max_discrepancy, noise_stream, optimal_steps,
    private_run, sweep_p, sweep_t, sweep_t_means, CollapseResult, Corners, DiagnoseRow, Grid, GridRow, Instance,
    PrivateRun, RowStatus, SweepPRow, SweepT, SweepTRow,
};

use crate::error::Result;
use crate::ou_gf::LossEstimate;
use crate::privacy::paper_hyperparams;
use svg::{HeatMap, LinePlot, Series};

pub const SWEEP_P_HEADER: &str = "p,seed,tau_scale,tau,steps,eta,eta_t,c_clip,epsilon,delta,sigma,tail_ok,validation_loss,risk_private,stderr_p,risk_baseline,stderr_b,excess,excess_stderr,clip_fraction,baseline_converged,status";
pub const SWEEP_P_SUMMARY_HEADER: &str = "p,seeds,dp_mean,dp_stderr,gd_mean,gd_stderr,excess_mean,excess_stderr";
pub const SWEEP_T_HEADER: &str =
    "p,seed,steps,eta,eta_t,c_clip,epsilon,delta,sigma,tail_ok,test_loss,stderr,clip_fraction,status";
pub const SWEEP_T_SUMMARY_HEADER: &str = "p,steps,x_rescaled,mean_loss,stderr,count";
pub const COLLAPSE_HEADER: &str = "p,steps,x_rescaled,x_control,mean_loss";
pub const COLLAPSE_SUMMARY_HEADER: &str = "abscissa,max_discrepancy,grid_points";
pub const GRID_HEADER: &str =
    "p,seed,clip_rel,c_clip,steps,eta,eta_t,epsilon,delta,sigma,tail_ok,test_loss,stderr,clip_fraction,status";
pub const GRID_SUMMARY_HEADER: &str = "clip_rel,steps,mean_loss";
pub const DIAGNOSE_HEADER: &str = "p,seed,lambda_max,lambda_d,lambda_d_plus_1,lambda_min,gap_ratio,lambda_min_over_p,tau,c_clip,big_sigma,sigma,eta,steps,tail_ok,clip_free,worst_margin,clip_fraction,n_sqrt_p,log_ratio,n_lower,n_upper,status";
pub const DIAGNOSE_SUMMARY_HEADER: &str = "p,seeds,gap_ratio_mean,lambda_min_over_p_mean,clip_free_fraction";

/// Files and metadata produced by one task.
#[derive(Debug, Clone)]
pub struct TaskOutput {
    pub task: Task,
    pub rows: usize,
    pub diverged: usize,
    pub files: Vec<PathBuf>,
    pub meta: serde_json::Value,
}

fn e(x: f64) -> String {
    format!("{x:.16e}")
}

fn mean_of(vals: impl Iterator<Item = f64>) -> LossEstimate {
    let v: Vec<f64> = vals.filter(|x| x.is_finite()).collect();
    if v.is_empty() {
        LossEstimate {
            mean: f64::NAN,
            stderr: f64::NAN,
        }
    } else {
        LossEstimate::from_samples(v)
    }
}

pub fn sweep_p_csv(cfg: &ExperimentConfig, rows: &[SweepPRow]) -> String {
    let (eps, delta) = (cfg.epsilon, cfg.delta_value());
    let mut out = format!("{SWEEP_P_HEADER}\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            r.p,
            r.seed,
            e(r.tau_scale),
            e(r.tau),
            r.run.steps,
            e(r.run.eta),
            e(r.run.eta_t),
            e(r.run.c_clip),
            e(eps),
            e(delta),
            e(r.run.sigma),
            r.run.tail_ok,
            e(r.validation_loss),
            e(r.risk.risk_private.mean),
            e(r.risk.risk_private.stderr),
            e(r.risk.risk_baseline.mean),
            e(r.risk.risk_baseline.stderr),
            e(r.risk.excess),
            e(r.risk.excess_stderr),
            e(r.run.clip_fraction),
            r.baseline_converged,
            r.run.status().name()
        );
    }
    out
}

/// Seed-averaged private and baseline losses per width, sorted by `p`.
pub fn sweep_p_summary(rows: &[SweepPRow]) -> Vec<(usize, usize, LossEstimate, LossEstimate, LossEstimate)> {
    let mut ps: Vec<usize> = rows.iter().map(|r| r.p).collect();
    ps.sort_unstable();
    ps.dedup();
    ps.into_iter()
        .map(|p| {
            let sel: Vec<&SweepPRow> = rows.iter().filter(|r| r.p == p).collect();
            (
                p,
                sel.len(),
                mean_of(sel.iter().map(|r| r.risk.risk_private.mean)),
                mean_of(sel.iter().map(|r| r.risk.risk_baseline.mean)),
                mean_of(sel.iter().map(|r| r.risk.excess)),
            )
        })
        .collect()
}

pub fn sweep_t_csv(cfg: &ExperimentConfig, rows: &[SweepTRow]) -> String {
    let mut out = format!("{SWEEP_T_HEADER}\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            r.p,
            r.seed,
            r.run.steps,
            e(r.run.eta),
            e(r.run.eta_t),
            e(r.run.c_clip),
            e(cfg.epsilon),
            e(cfg.delta_value()),
            e(r.run.sigma),
            r.run.tail_ok,
            e(r.test.mean),
            e(r.test.stderr),
            e(r.run.clip_fraction),
            r.run.status().name()
        );
    }
    out
}

fn sweep_t_summary_csv(cfg: &ExperimentConfig, sweep: &SweepT) -> String {
    let mut out = format!("{SWEEP_T_SUMMARY_HEADER}\n");
    for (p, t, est, count) in sweep_t_means(&sweep.rows) {
        let x = sweep.eta * t as f64 * p as f64 / cfg.d as f64;
        let _ = writeln!(out, "{p},{t},{},{},{},{count}", e(x), e(est.mean), e(est.stderr));
    }
    out
}

pub fn grid_csv(cfg: &ExperimentConfig, grid: &Grid) -> String {
    let mut out = format!("{GRID_HEADER}\n");
    for g in &grid.rows {
        let r = &g.row;
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            r.p,
            r.seed,
            e(g.clip_rel),
            e(r.run.c_clip),
            r.run.steps,
            e(r.run.eta),
            e(r.run.eta_t),
            e(cfg.epsilon),
            e(cfg.delta_value()),
            e(r.run.sigma),
            r.run.tail_ok,
            e(r.test.mean),
            e(r.test.stderr),
            e(r.run.clip_fraction),
            r.run.status().name()
        );
    }
    out
}

pub fn diagnose_csv(rows: &[DiagnoseRow]) -> String {
    let mut out = format!("{DIAGNOSE_HEADER}\n");
    for r in rows {
        let s = &r.spectrum;
        let ratio = |name: &str| r.regime.condition(name).map_or(f64::NAN, |c| c.ratio);
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            r.p,
            r.seed,
            e(s.lambda_max),
            e(s.lambda_d),
            e(s.lambda_d_plus_1),
            e(s.lambda_min),
            e(s.gap_ratio),
            e(s.lambda_min / r.p as f64),
            e(r.hyper.tau),
            e(r.hyper.c_clip),
            e(r.hyper.big_sigma),
            e(r.run.sigma),
            e(r.run.eta),
            r.run.steps,
            r.run.tail_ok,
            r.clip_free,
            e(r.worst_margin),
            e(r.run.clip_fraction),
            e(ratio("n_sqrt_p")),
            e(ratio("log_ratio")),
            e(ratio("n_lower")),
            e(ratio("n_upper")),
            r.run.status().name()
        );
    }
    out
}

fn timestamp() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs())
}

struct Writer {
    dir: PathBuf,
    task: Task,
    files: Vec<PathBuf>,
}

impl Writer {
    fn new(dir: &Path, task: Task) -> Result<Self> {
        fs::create_dir_all(dir)?;
        Ok(Self {
            dir: dir.to_path_buf(),
            task,
            files: Vec::new(),
        })
    }

    fn put(&mut self, suffix: &str, contents: &str) -> Result<()> {
        let path = self.dir.join(format!("{}{suffix}", self.task.name()));
        fs::write(&path, contents)?;
        self.files.push(path);
        Ok(())
    }

    fn svg(&mut self, contents: &str) -> Result<()> {
        self.put(&format!("_{}.svg", timestamp()), contents)
    }
}

fn eta_rule(cfg: &ExperimentConfig, shared: bool) -> String {
    match (cfg.eta, shared) {
        (Some(_), _) => "fixed".into(),
        (None, true) => format!("{} * min over instances of n / (2 lambda_max(K))", cfg.eta_factor),
        (None, false) => format!("{} * n / (2 lambda_max(K)) per instance", cfg.eta_factor),
    }
}

/// Runs the configured task and writes its outputs under `cfg.output_dir`.
pub fn run_task(cfg: &ExperimentConfig) -> Result<TaskOutput> {
    cfg.validate()?;
    if cfg.task == Task::Calibrate {
        let p = cfg.p_values()[0];
        let h = paper_hyperparams(cfg.n, cfg.d, p, &cfg.budget()?)?;
        let v = json!({
            "n": cfg.n, "d": cfg.d, "p": p,
            "epsilon": cfg.epsilon, "delta": cfg.delta_value(),
            "sigma": h.sigma, "Sigma": h.big_sigma, "tau": h.tau, "c_clip": h.c_clip,
        });
        return Ok(TaskOutput {
            task: cfg.task,
            rows: 1,
            diverged: 0,
            files: Vec::new(),
            meta: v,
        });
    }
    let mut w = Writer::new(&cfg.output_dir, cfg.task)?;
    let base_meta = json!({
        "task": cfg.task.name(),
        "config": cfg,
        "delta": cfg.delta_value(),
        "p_list": cfg.p_values(),
        "T_list": cfg.t_values(),
    });
    let (rows, diverged, extra) = match cfg.task {
        Task::Calibrate => unreachable!(),
        Task::SweepP => {
            let rows = sweep_p(cfg)?;
            w.put(".csv", &sweep_p_csv(cfg, &rows))?;
            let summary = sweep_p_summary(&rows);
            let mut s = format!("{SWEEP_P_SUMMARY_HEADER}\n");
            for (p, k, dp, gd, ex) in &summary {
                let _ = writeln!(
                    s,
                    "{p},{k},{},{},{},{},{},{}",
                    e(dp.mean),
                    e(dp.stderr),
                    e(gd.mean),
                    e(gd.stderr),
                    e(ex.mean),
                    e(ex.stderr)
                );
            }
            w.put("_summary.csv", &s)?;
            let plot = LinePlot {
                title: format!("Test loss against width (n = {}, d = {})", cfg.n, cfg.d),
                x_label: "p".into(),
                y_label: "test loss".into(),
                log_x: true,
                log_y: true,
                series: vec![
                    Series {
                        name: "DP-GD".into(),
                        points: summary.iter().map(|r| (r.0 as f64, r.2.mean, r.2.stderr)).collect(),
                    },
                    Series {
                        name: "GD".into(),
                        points: summary.iter().map(|r| (r.0 as f64, r.3.mean, r.3.stderr)).collect(),
                    },
                ],
            };
            w.svg(&plot.render())?;
            let diverged = rows.iter().filter(|r| r.run.theta.is_none()).count();
            (
                rows.len(),
                diverged,
                json!({ "eta_rule": eta_rule(cfg, false), "baseline": cfg.baseline }),
            )
        }
        Task::SweepT | Task::Collapse => {
            let sweep = sweep_t(cfg)?;
            let diverged = sweep.rows.iter().filter(|r| r.run.theta.is_none()).count();
            let optimal: Vec<_> = optimal_steps(&sweep.rows)
                .into_iter()
                .map(|(p, t, l)| json!({"p": p, "steps": t, "mean_loss": l}))
                .collect();
            let mut extra = json!({
                "eta": sweep.eta,
                "eta_rule": eta_rule(cfg, true),
                "optimal_steps": optimal,
            });
            if cfg.task == Task::SweepT {
                w.put(".csv", &sweep_t_csv(cfg, &sweep.rows))?;
                w.put("_summary.csv", &sweep_t_summary_csv(cfg, &sweep))?;
                w.svg(&steps_plot(cfg, &sweep, false))?;
            } else {
                let c = collapse_analysis(cfg, &sweep);
                let mut s = format!("{COLLAPSE_HEADER}\n");
                for (p, pts) in &c.curves {
                    for &(t, x, xc, l) in pts {
                        let _ = writeln!(s, "{p},{t},{},{},{}", e(x), e(xc), e(l));
                    }
                }
                w.put(".csv", &s)?;
                w.put(
                    "_summary.csv",
                    &format!(
                        "{COLLAPSE_SUMMARY_HEADER}\nrescaled,{},{g}\ncontrol,{},{g}\n",
                        e(c.discrepancy),
                        e(c.control_discrepancy),
                        g = cfg.collapse_grid
                    ),
                )?;
                w.svg(&steps_plot(cfg, &sweep, true))?;
                extra["discrepancy"] = json!(c.discrepancy);
                extra["control_discrepancy"] = json!(c.control_discrepancy);
            }
            (sweep.rows.len(), diverged, extra)
        }
        Task::GridClipT => {
            let grid = grid_clip_t(cfg)?;
            w.put(".csv", &grid_csv(cfg, &grid))?;
            let means = grid.cell_means();
            let mut s = format!("{GRID_SUMMARY_HEADER}\n");
            for (ti, t) in grid.t_list.iter().enumerate() {
                for (ci, c) in grid.clip_list.iter().enumerate() {
                    let _ = writeln!(s, "{},{t},{}", e(*c), e(means[ti][ci]));
                }
            }
            w.put("_summary.csv", &s)?;
            let hm = HeatMap {
                title: format!("Mean test loss (p = {})", grid.p),
                x_label: "clipping constant / sqrt(p)".into(),
                y_label: "iterations T".into(),
                x_ticks: grid.clip_list.iter().map(|c| format!("{c}")).collect(),
                y_ticks: grid.t_list.iter().map(|t| format!("{t}")).collect(),
                values: means,
                log_scale: true,
            };
            w.svg(&hm.render())?;
            let diverged = grid.rows.iter().filter(|r| r.row.run.theta.is_none()).count();
            (
                grid.rows.len(),
                diverged,
                json!({ "eta": grid.eta, "eta_rule": eta_rule(cfg, true), "p": grid.p, "corners": grid.corners() }),
            )
        }
        Task::Diagnose => {
            let rows = diagnose(cfg)?;
            w.put(".csv", &diagnose_csv(&rows))?;
            let mut ps: Vec<usize> = rows.iter().map(|r| r.p).collect();
            ps.dedup();
            let mut s = format!("{DIAGNOSE_SUMMARY_HEADER}\n");
            let mut pts = Vec::new();
            for p in ps {
                let sel: Vec<&DiagnoseRow> = rows.iter().filter(|r| r.p == p).collect();
                let k = sel.len() as f64;
                let gap = sel.iter().map(|r| r.spectrum.gap_ratio).sum::<f64>() / k;
                let lmin = sel.iter().map(|r| r.spectrum.lambda_min / p as f64).sum::<f64>() / k;
                let free = sel.iter().filter(|r| r.clip_free).count() as f64 / k;
                let _ = writeln!(s, "{p},{},{},{},{}", sel.len(), e(gap), e(lmin), e(free));
                pts.push((p as f64, gap, 0.0));
            }
            w.put("_summary.csv", &s)?;
            let plot = LinePlot {
                title: format!("Kernel spectral gap (n = {}, d = {})", cfg.n, cfg.d),
                x_label: "p".into(),
                y_label: "lambda_d / lambda_{d+1}".into(),
                log_x: true,
                log_y: false,
                series: vec![Series {
                    name: "gap ratio".into(),
                    points: pts,
                }],
            };
            w.svg(&plot.render())?;
            let regime: Vec<_> = rows.iter().map(|r| &r.regime).collect();
            let diverged = rows.iter().filter(|r| r.run.theta.is_none()).count();
            (
                rows.len(),
                diverged,
                json!({ "eta_rule": eta_rule(cfg, false), "regime": regime }),
            )
        }
    };
    let mut meta = base_meta;
    meta["rows"] = json!(rows);
    meta["diverged"] = json!(diverged);
    if let serde_json::Value::Object(m) = extra {
        for (k, v) in m {
            meta[k] = v;
        }
    }
    w.put("_meta.json", &serde_json::to_string_pretty(&meta)?)?;
    Ok(TaskOutput {
        task: cfg.task,
        rows,
        diverged,
        files: w.files,
        meta,
    })
}

fn steps_plot(cfg: &ExperimentConfig, sweep: &SweepT, rescaled: bool) -> String {
    let means = sweep_t_means(&sweep.rows);
    let mut ps: Vec<usize> = means.iter().map(|m| m.0).collect();
    ps.dedup();
    let series = ps
        .iter()
        .map(|&p| Series {
            name: format!("p = {p}"),
            points: means
                .iter()
                .filter(|m| m.0 == p && m.1 > 0)
                .map(|&(_, t, est, _)| {
                    let x = if rescaled {
                        sweep.eta * t as f64 * p as f64 / cfg.d as f64
                    } else {
                        t as f64
                    };
                    (x, est.mean, est.stderr)
                })
                .collect(),
        })
        .collect();
    LinePlot {
        title: if rescaled {
            "Test loss against rescaled time".into()
        } else {
            "Test loss against iterations".into()
        },
        x_label: if rescaled { "eta T p / d".into() } else { "T".into() },
        y_label: "test loss".into(),
        log_x: true,
        log_y: false,
        series,
    }
    .render()
}
