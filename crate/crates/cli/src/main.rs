use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use dpflow_core::harness::{run_task, ExperimentConfig, Task};
use dpflow_core::Error;

/// Differentially private gradient descent experiments on random-features regression.
#[derive(Debug, Parser)]
#[command(name = "dpflow", version)]
struct Cli {
    /// sweep_p, sweep_T, grid_clip_T, collapse, calibrate or diagnose.
    task: Task,
    /// JSON experiment configuration; flags override its keys.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    d: Option<usize>,
    /// Comma-separated widths.
    #[arg(long, value_delimiter = ',')]
    p: Option<Vec<usize>>,
    /// Comma-separated iteration counts.
    #[arg(long = "T", value_delimiter = ',')]
    t: Option<Vec<usize>>,
    #[arg(long)]
    eps: Option<f64>,
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long)]
    eta: Option<f64>,
    /// Number of seeds; runs seeds 0..N.
    #[arg(long)]
    seeds: Option<u64>,
    #[arg(long)]
    test_count: Option<usize>,
    #[arg(long)]
    workers: Option<usize>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Abort with exit code 3 on a divergent run instead of flagging the row.
    #[arg(long)]
    fail_on_divergence: bool,
}

fn build_config(cli: &Cli) -> Result<ExperimentConfig, Error> {
    let mut cfg = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)?;
            serde_json::from_str::<ExperimentConfig>(&text)?
        }
        None => ExperimentConfig::default(),
    };
    cfg.task = cli.task;
    if let Some(v) = cli.n {
        cfg.n = v;
    }
    if let Some(v) = cli.d {
        cfg.d = v;
    }
    if let Some(v) = &cli.p {
        cfg.p_list = Some(v.clone());
    }
    if let Some(v) = &cli.t {
        cfg.t_list = Some(v.clone());
    }
    if let Some(v) = cli.eps {
        cfg.epsilon = v;
    }
    if let Some(v) = cli.delta {
        cfg.delta = Some(v);
    }
    if let Some(v) = cli.eta {
        cfg.eta = Some(v);
    }
    if let Some(v) = cli.seeds {
        cfg.seeds = (0..v).collect();
    }
    if let Some(v) = cli.test_count {
        cfg.test_count = v;
    }
    if let Some(v) = cli.workers {
        cfg.workers = Some(v);
    }
    if let Some(v) = &cli.out {
        cfg.output_dir = v.clone();
    }
    cfg.fail_on_divergence |= cli.fail_on_divergence;
    cfg.validate()?;
    Ok(cfg)
}

fn exit_code(err: &Error) -> u8 {
    match err {
        Error::Divergence { .. } | Error::Stability { .. } => 3,
        Error::Config(_)
        | Error::BudgetRange { .. }
        | Error::Json(_)
        | Error::Regime(_)
        | Error::Inadmissible(_)
        | Error::DimensionMismatch { .. } => 2,
        _ => 1,
    }
}

fn run(cli: &Cli) -> Result<(), Error> {
    let cfg = build_config(cli)?;
    let out = run_task(&cfg)?;
    let report = if cfg.task == Task::Calibrate {
        out.meta
    } else {
        serde_json::json!({
            "task": out.task.name(),
            "rows": out.rows,
            "diverged": out.diverged,
            "files": out.files,
        })
    };
    println!("{}", serde_json::to_string_pretty(&report)?);
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(exit_code(&err))
        }
    }
}
