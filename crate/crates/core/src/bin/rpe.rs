//! Robust precision estimation CLI.
//!
//! Subcommands: `generate` (synthetic datasets), `run` (pipeline over a
//! generated or file stream), `bench` (corruption grid over seeds),
//! `diag` (descent-sum diagnostic). Exit codes: 0 success, 2 config
//! error, 3 data error, 4 numerical error.

use std::io::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use robust_precision::runner::{self, ExperimentConfig, RunArtifacts, RunInput};
use robust_precision::Error;

#[derive(Parser)]
#[command(name = "rpe", about = "Online robust covariance and sparse precision estimation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct CommonOpts {
    /// Flat key = value config file; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory for artifacts.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// RNG seed; repeat for multiple seeds.
    #[arg(long)]
    seed: Vec<u64>,
    #[arg(long)]
    p: Option<usize>,
    #[arg(long)]
    t: Option<usize>,
    #[arg(long)]
    t0: Option<usize>,
    #[arg(long)]
    eta: Option<f64>,
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    step_fraction: Option<f64>,
    /// Corruption model: column | distributed | per-row.
    #[arg(long)]
    corruption: Option<String>,
    #[arg(long)]
    mu: Option<f64>,
    #[arg(long)]
    sigma: Option<f64>,
    /// Comma-separated subset of {robust,naive}.
    #[arg(long)]
    estimators: Option<String>,
    /// Comma-separated time steps at which full matrices are dumped.
    #[arg(long)]
    checkpoints: Option<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Write ground truth, clean and corrupted streams, and the mask.
    Generate(CommonOpts),
    /// Run the estimation pipeline over a stream.
    Run {
        #[command(flatten)]
        common: CommonOpts,
        /// Stream CSV path, or "generate" to synthesize one.
        #[arg(long, default_value = "generate")]
        input: String,
    },
    /// Run the corruption grid (clean / small / large) over every seed.
    Bench(CommonOpts),
    /// Descent-sum boundedness diagnostic (defaults to the large sparse
    /// configuration p=100, t=1000, t0=100, lambda=0.5).
    Diag(CommonOpts),
}

fn resolve_config(opts: &CommonOpts, base: ExperimentConfig) -> Result<ExperimentConfig, Error> {
    let mut config = match &opts.config {
        Some(path) => ExperimentConfig::from_file(path)?,
        None => base,
    };
    if !opts.seed.is_empty() {
        config.seeds = opts.seed.clone();
    }
    if let Some(v) = opts.p {
        config.p = v;
    }
    if let Some(v) = opts.t {
        config.t = v;
    }
    if let Some(v) = opts.t0 {
        config.t0 = v;
    }
    if let Some(v) = opts.eta {
        config.eta = v;
    }
    if let Some(v) = opts.delta {
        config.delta = v;
    }
    if let Some(v) = opts.lambda {
        config.lambda = v;
    }
    if let Some(v) = opts.step_fraction {
        config.step_fraction = v;
    }
    if let Some(v) = &opts.corruption {
        config.set("corruption", v)?;
    }
    if let Some(v) = opts.mu {
        config.mu = v;
    }
    if let Some(v) = opts.sigma {
        config.sigma = v;
    }
    if let Some(v) = &opts.estimators {
        config.set("estimators", v)?;
    }
    if let Some(v) = &opts.checkpoints {
        config.set("checkpoints", v)?;
    }
    Ok(config)
}

fn report(artifacts: RunArtifacts) {
    for w in &artifacts.warnings {
        eprintln!("warning: {w}");
    }
    // tolerate a closed pipe (e.g. `rpe run | head`)
    let mut out = std::io::stdout();
    for p in &artifacts.paths {
        if writeln!(out, "{}", p.display()).is_err() {
            break;
        }
    }
}

fn run() -> Result<(), Error> {
    let cli = Cli::parse();
    match cli.command {
        Command::Generate(opts) => {
            let config = resolve_config(&opts, ExperimentConfig::default())?;
            report(runner::cmd_generate(&config, &opts.out)?);
        }
        Command::Run { common, input } => {
            let config = resolve_config(&common, ExperimentConfig::default())?;
            let artifacts = if input == "generate" {
                runner::cmd_run(&config, RunInput::Generate, &common.out)?
            } else {
                runner::cmd_run(&config, RunInput::File(input.as_ref()), &common.out)?
            };
            report(artifacts);
        }
        Command::Bench(opts) => {
            let base = ExperimentConfig {
                seeds: runner::BENCH_SEEDS.to_vec(),
                ..ExperimentConfig::default()
            };
            let config = resolve_config(&opts, base)?;
            report(runner::cmd_bench(&config, &opts.out)?);
        }
        Command::Diag(opts) => {
            let base = ExperimentConfig {
                p: 100,
                t: 1000,
                t0: 100,
                lambda: 0.5,
                seeds: vec![0, 1, 2],
                ..ExperimentConfig::default()
            };
            let config = resolve_config(&opts, base)?;
            report(runner::cmd_diag(&config, &opts.out)?);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
