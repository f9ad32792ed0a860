//! Experiment orchestration: stream the trimmed covariance estimator
//! into the alternating-minimization solver, record error traces and
//! bound diagnostics, and emit everything as CSV.

pub mod config;
pub mod io;

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use nalgebra::DMatrix;

use crate::bounds::{self, ErrorTrace, TraceRow};
use crate::error::{Error, Result};
use crate::gama::{self, GamaState};
use crate::synth::{self, CorruptionSpec, GroundTruth};
use crate::trim::{NaiveCovariance, TrimState};

pub use config::{CovarianceSource, Estimators, ExperimentConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EstimatorKind {
    Robust,
    Naive,
}

impl EstimatorKind {
    pub fn name(&self) -> &'static str {
        match self {
            EstimatorKind::Robust => "robust",
            EstimatorKind::Naive => "naive",
        }
    }
}

/// Everything one pipeline pass produces.
pub struct PipelineResult {
    pub trace: ErrorTrace,
    pub final_cov: DMatrix<f64>,
    pub final_gamma: DMatrix<f64>,
    pub final_phi: DMatrix<f64>,
    /// (t, matrix name, matrix) triples dumped at the checkpoint steps.
    pub checkpoints: Vec<(usize, &'static str, DMatrix<f64>)>,
    /// max_ij |Gamma_ij - S_ij| over every post-t0 step.
    pub max_dual_gap: f64,
    pub warnings: Vec<String>,
}

/// Stream `data` (p x t, one observation per column) through the
/// covariance estimator and the precision solver.
///
/// Trace rows are emitted for every t in [1, T]; before t0 the estimate
/// is reported as the zero matrix and solver columns are NaN. Error
/// columns are NaN when no ground truth is supplied.
pub fn run_stream(
    config: &ExperimentConfig,
    kind: EstimatorKind,
    data: &DMatrix<f64>,
    truth: Option<&GroundTruth>,
    gamma_star: Option<&DMatrix<f64>>,
) -> Result<PipelineResult> {
    let p = data.nrows();
    let total = data.ncols();
    if total <= config.t0 {
        return Err(Error::Config(format!(
            "stream length {total} does not exceed t0 = {}",
            config.t0
        )));
    }
    let trim_config = config.trim_config()?;
    let gama_config = config.gama_config()?;
    let mut warnings = Vec::new();
    if !trim_config.theory_valid {
        warnings.push(format!(
            "trimming fraction epsilon = {:.4} is outside the range covered by the error \
             bounds (t0 or delta too small for eta = {}); running anyway",
            trim_config.epsilon, config.eta
        ));
    }

    let mut robust = match kind {
        EstimatorKind::Robust => Some(TrimState::new(trim_config, p)?),
        EstimatorKind::Naive => None,
    };
    let mut naive = match kind {
        EstimatorKind::Naive => Some(NaiveCovariance::new(p)),
        EstimatorKind::Robust => None,
    };
    let mut solver: Option<GamaState> = None;
    let mut trace = ErrorTrace::new();
    let mut delta_sum = 0.0;
    let mut max_dual_gap: f64 = 0.0;
    let mut checkpoints = Vec::new();

    let sigma = truth.map(|gt| bounds::sigma_max(&gt.s_star));
    let cor2 = match (truth, sigma) {
        (Some(_), Some(sig)) => {
            bounds::corollary_frobenius_bound(p, sig, trim_config.eta, config.delta, config.t0)?
        }
        _ => f64::NAN,
    };
    let zero = DMatrix::<f64>::zeros(p, p);

    let mut sample = vec![0.0; p];
    for step in 1..=total {
        for i in 0..p {
            sample[i] = data[(i, step - 1)];
        }
        let s_hat = match (&mut robust, &mut naive) {
            (Some(state), _) => {
                state.ingest(&sample)?;
                if step >= config.t0 {
                    Some(state.current_estimate()?)
                } else {
                    None
                }
            }
            (_, Some(state)) => {
                state.ingest(&sample)?;
                if step >= config.t0 {
                    Some(state.current_estimate())
                } else {
                    None
                }
            }
            _ => unreachable!(),
        };

        let mut row = TraceRow {
            t: step,
            cov_err: f64::NAN,
            prec_err: f64::NAN,
            dual_err: f64::NAN,
            thm1_bound: f64::NAN,
            cor2_bound: cor2,
            lambda_min_gamma: f64::NAN,
            delta_sum,
        };

        if let Some(s_hat) = &s_hat {
            if step == config.t0 {
                solver = Some(gama::init_dual(s_hat, gama_config)?);
            } else {
                let solver = solver.as_mut().expect("solver initialized at t0");
                let diag = solver.step(s_hat)?;
                delta_sum += diag.slack;
                max_dual_gap = max_dual_gap.max(diag.dual_gap);
                row.lambda_min_gamma = diag.lambda_min_gamma;
                row.delta_sum = delta_sum;
            }
            let solver = solver.as_ref().unwrap();
            if let Some(gt) = truth {
                row.cov_err = bounds::frobenius_error(s_hat, &gt.s_star)?;
                row.prec_err = bounds::frobenius_error(solver.phi(), &gt.theta_star)?;
                row.thm1_bound =
                    bounds::theorem1_bound(step, config.t0, config.delta, trim_config.eta, sigma.unwrap())?;
            }
            if let Some(gs) = gamma_star {
                row.dual_err = bounds::frobenius_error(solver.gamma(), gs)?;
            }
            if config.checkpoints.contains(&step) {
                checkpoints.push((step, "cov", s_hat.clone()));
                checkpoints.push((step, "gamma", solver.gamma().clone()));
                checkpoints.push((step, "phi", solver.phi().clone()));
            }
        } else if let Some(gt) = truth {
            // pre-t0 convention: the covariance estimate is the zero matrix
            row.cov_err = bounds::frobenius_error(&zero, &gt.s_star)?;
            row.prec_err = bounds::frobenius_error(&zero, &gt.theta_star)?;
        }
        trace.push(row)?;
    }

    let solver = solver.expect("stream longer than t0");
    let final_cov = match (&robust, &naive) {
        (Some(state), _) => state.current_estimate()?,
        (_, Some(state)) => state.current_estimate(),
        _ => unreachable!(),
    };
    Ok(PipelineResult {
        trace,
        final_cov,
        final_gamma: solver.gamma().clone(),
        final_phi: solver.phi().clone(),
        checkpoints,
        max_dual_gap,
        warnings,
    })
}

/// Paths of every file a command emitted.
#[derive(Debug, Default)]
pub struct RunArtifacts {
    pub paths: Vec<PathBuf>,
    pub warnings: Vec<String>,
}

impl RunArtifacts {
    fn add(&mut self, path: PathBuf) {
        self.paths.push(path);
    }

    /// Every listed path exists and is non-empty.
    pub fn verify(&self) -> Result<()> {
        for p in &self.paths {
            let meta = fs::metadata(p)
                .map_err(|e| Error::Data(format!("artifact {} missing: {e}", p.display())))?;
            if meta.len() == 0 {
                return Err(Error::Data(format!("artifact {} is empty", p.display())));
            }
        }
        Ok(())
    }
}

fn write_text(artifacts: &mut RunArtifacts, path: PathBuf, text: &str) -> Result<()> {
    fs::write(&path, text)?;
    artifacts.add(path);
    Ok(())
}

fn write_trace(artifacts: &mut RunArtifacts, path: PathBuf, trace: &ErrorTrace) -> Result<()> {
    let mut w = BufWriter::new(File::create(&path)?);
    trace.write_csv(&mut w)?;
    w.flush()?;
    artifacts.add(path);
    Ok(())
}

fn write_matrix(artifacts: &mut RunArtifacts, path: PathBuf, m: &DMatrix<f64>) -> Result<()> {
    io::write_matrix_csv(&path, m)?;
    artifacts.add(path);
    Ok(())
}

fn corruption_spec(config: &ExperimentConfig, seed: u64) -> CorruptionSpec {
    CorruptionSpec {
        model: config.corruption,
        eta: config.eta,
        mu: config.mu,
        sigma: config.sigma,
        seed,
    }
}

fn ground_truth_for(config: &ExperimentConfig, seed: u64) -> Result<(GroundTruth, DMatrix<f64>)> {
    let mut gt = synth::generate_graph(config.p, seed)?;
    if config.covariance_source == CovarianceSource::Literal {
        // sample with the generated precision used directly as covariance
        std::mem::swap(&mut gt.theta_star, &mut gt.s_star);
        gt = GroundTruth {
            s_star: gt.theta_star.clone(),
            theta_star: gama::spd_inverse(&gt.theta_star)?,
            edges: gt.edges,
        };
    }
    let stream = synth::sample_stream(&gt.s_star, config.t, seed)?;
    Ok((gt, stream))
}

/// Write ground truth, clean stream, corrupted stream, mask, and the
/// resolved config into `out`.
pub fn cmd_generate(config: &ExperimentConfig, out: &Path) -> Result<RunArtifacts> {
    config.validate()?;
    fs::create_dir_all(out)?;
    let mut artifacts = RunArtifacts::default();
    let seed = config.seeds[0];
    let (gt, clean) = ground_truth_for(config, seed)?;
    let spec = corruption_spec(config, seed);
    let (corrupted, mask) = synth::corrupt(&clean, &spec)?;
    if mask.is_empty() && config.eta > 0.0 {
        artifacts
            .warnings
            .push(format!("eta*t = {} < 1: no cells corrupted", config.eta * config.t as f64));
    }
    write_matrix(&mut artifacts, out.join("theta_star.csv"), &gt.theta_star)?;
    write_matrix(&mut artifacts, out.join("s_star.csv"), &gt.s_star)?;
    io::write_edges_csv(&out.join("edges.csv"), &gt.edges)?;
    artifacts.add(out.join("edges.csv"));
    io::write_stream_csv(&out.join("clean_stream.csv"), &clean)?;
    artifacts.add(out.join("clean_stream.csv"));
    io::write_stream_csv(&out.join("corrupted_stream.csv"), &corrupted)?;
    artifacts.add(out.join("corrupted_stream.csv"));
    io::write_mask_csv(&out.join("mask.csv"), &mask)?;
    artifacts.add(out.join("mask.csv"));
    write_text(&mut artifacts, out.join("config.txt"), &config.echo())?;
    artifacts.verify()?;
    Ok(artifacts)
}

/// Input source for `cmd_run`.
pub enum RunInput<'a> {
    /// Generate ground truth and a corrupted stream from the config.
    Generate,
    /// Read an existing stream CSV; no ground truth available.
    File(&'a Path),
}

/// Run the full estimation pipeline over a generated or file stream.
pub fn cmd_run(config: &ExperimentConfig, input: RunInput, out: &Path) -> Result<RunArtifacts> {
    config.validate()?;
    fs::create_dir_all(out)?;
    let mut artifacts = RunArtifacts::default();
    let seed = config.seeds[0];

    let (truth, data) = match input {
        RunInput::Generate => {
            let (gt, clean) = ground_truth_for(config, seed)?;
            let spec = corruption_spec(config, seed);
            let (corrupted, _mask) = synth::corrupt(&clean, &spec)?;
            (Some(gt), corrupted)
        }
        RunInput::File(path) => {
            let data = io::read_stream_csv(path)?;
            (None, data)
        }
    };
    let gamma_star = match &truth {
        Some(gt) => Some(
            gama::solve_dual_fixed_point(&gt.s_star, config.gama_config()?, 1e-10, 100_000)?
                .gamma()
                .clone(),
        ),
        None => None,
    };

    for kind in [EstimatorKind::Robust, EstimatorKind::Naive] {
        let enabled = match kind {
            EstimatorKind::Robust => config.estimators.robust,
            EstimatorKind::Naive => config.estimators.naive,
        };
        if !enabled {
            continue;
        }
        let result = run_stream(config, kind, &data, truth.as_ref(), gamma_star.as_ref())?;
        artifacts.warnings.extend(result.warnings.clone());
        let name = kind.name();
        write_trace(&mut artifacts, out.join(format!("trace_{name}.csv")), &result.trace)?;
        write_matrix(&mut artifacts, out.join(format!("cov_final_{name}.csv")), &result.final_cov)?;
        write_matrix(
            &mut artifacts,
            out.join(format!("gamma_final_{name}.csv")),
            &result.final_gamma,
        )?;
        write_matrix(&mut artifacts, out.join(format!("phi_final_{name}.csv")), &result.final_phi)?;
        for (t, what, m) in &result.checkpoints {
            write_matrix(&mut artifacts, out.join(format!("{what}_t{t}_{name}.csv")), m)?;
        }
    }
    if let Some(gt) = &truth {
        write_matrix(&mut artifacts, out.join("theta_star.csv"), &gt.theta_star)?;
        write_matrix(&mut artifacts, out.join("s_star.csv"), &gt.s_star)?;
    }
    write_text(&mut artifacts, out.join("config.txt"), &config.echo())?;
    artifacts.verify()?;
    Ok(artifacts)
}

/// The benchmark grid: a clean cell plus small (N(1,4)) and large
/// (N(1,25)) corruption, each through every enabled estimator.
pub const BENCH_CELLS: [(&str, Option<(f64, f64)>); 3] = [
    ("clean", None),
    ("small", Some((1.0, 2.0))),
    ("large", Some((1.0, 5.0))),
];

/// Default seed set for benchmark runs (10 seeds, medians reported).
pub const BENCH_SEEDS: [u64; 10] = [10, 11, 12, 13, 14, 15, 16, 17, 18, 19];

pub struct BenchSummaryRow {
    pub cell: String,
    pub estimator: &'static str,
    pub median_final_cov_err: f64,
    pub median_final_prec_err: f64,
    pub max_dual_gap: f64,
}

/// Run the corruption grid over every seed, emitting per-seed traces,
/// per-cell median trajectories, and a final-error summary.
pub fn cmd_bench(config: &ExperimentConfig, out: &Path) -> Result<RunArtifacts> {
    config.validate()?;
    fs::create_dir_all(out)?;
    let mut artifacts = RunArtifacts::default();
    if config.seeds.len() < 3 {
        artifacts.warnings.push(format!(
            "only {} seed(s): summary medians are low-confidence",
            config.seeds.len()
        ));
    }

    let mut summary_rows: Vec<BenchSummaryRow> = Vec::new();
    for (cell, noise) in BENCH_CELLS {
        for kind in [EstimatorKind::Robust, EstimatorKind::Naive] {
            let enabled = match kind {
                EstimatorKind::Robust => config.estimators.robust,
                EstimatorKind::Naive => config.estimators.naive,
            };
            if !enabled {
                continue;
            }
            let mut final_cov_errs = Vec::new();
            let mut final_prec_errs = Vec::new();
            let mut cov_curves: Vec<Vec<f64>> = Vec::new();
            let mut prec_curves: Vec<Vec<f64>> = Vec::new();
            let mut max_dual_gap: f64 = 0.0;
            let cell_dir = out.join(format!("{cell}_{}", kind.name()));
            fs::create_dir_all(&cell_dir)?;
            for &seed in &config.seeds {
                let (gt, clean) = ground_truth_for(config, seed)?;
                let data = match noise {
                    Some((mu, sigma)) => {
                        let spec = CorruptionSpec {
                            model: config.corruption,
                            eta: config.eta,
                            mu,
                            sigma,
                            seed,
                        };
                        synth::corrupt(&clean, &spec)?.0
                    }
                    None => clean,
                };
                let result = run_stream(config, kind, &data, Some(&gt), None)?;
                max_dual_gap = max_dual_gap.max(result.max_dual_gap);
                let rows = result.trace.rows();
                cov_curves.push(rows.iter().map(|r| r.cov_err).collect());
                prec_curves.push(rows.iter().map(|r| r.prec_err).collect());
                let last = rows.last().unwrap();
                final_cov_errs.push(last.cov_err);
                final_prec_errs.push(last.prec_err);
                write_trace(
                    &mut artifacts,
                    cell_dir.join(format!("seed_{seed}.csv")),
                    &result.trace,
                )?;
            }
            let median_path = out.join(format!("median_{cell}_{}.csv", kind.name()));
            {
                let mut w = BufWriter::new(File::create(&median_path)?);
                writeln!(w, "t,cov_err_median,prec_err_median")?;
                let steps = cov_curves[0].len();
                for i in 0..steps {
                    let c = median(cov_curves.iter().map(|c| c[i]));
                    let pr = median(prec_curves.iter().map(|c| c[i]));
                    writeln!(w, "{},{},{}", i + 1, c, pr)?;
                }
                w.flush()?;
            }
            artifacts.add(median_path);
            summary_rows.push(BenchSummaryRow {
                cell: cell.to_string(),
                estimator: kind.name(),
                median_final_cov_err: median(final_cov_errs.iter().copied()),
                median_final_prec_err: median(final_prec_errs.iter().copied()),
                max_dual_gap,
            });
        }
    }

    let summary_path = out.join("summary.csv");
    {
        let mut w = BufWriter::new(File::create(&summary_path)?);
        writeln!(
            w,
            "cell,estimator,median_final_cov_err,median_final_prec_err,max_dual_gap,confidence"
        )?;
        let confidence = if config.seeds.len() >= 3 { "ok" } else { "low" };
        for r in &summary_rows {
            writeln!(
                w,
                "{},{},{},{},{},{}",
                r.cell,
                r.estimator,
                r.median_final_cov_err,
                r.median_final_prec_err,
                r.max_dual_gap,
                confidence
            )?;
        }
        w.flush()?;
    }
    artifacts.add(summary_path);
    write_text(&mut artifacts, out.join("config.txt"), &config.echo())?;
    artifacts.verify()?;
    Ok(artifacts)
}

/// Descent-sum diagnostic: run the pipeline and emit the running sum of
/// the per-step descent terms along with the dual spectrum extremes.
pub fn cmd_diag(config: &ExperimentConfig, out: &Path) -> Result<RunArtifacts> {
    config.validate()?;
    fs::create_dir_all(out)?;
    let mut artifacts = RunArtifacts::default();
    for &seed in &config.seeds {
        let (gt, clean) = ground_truth_for(config, seed)?;
        let spec = corruption_spec(config, seed);
        let (data, _mask) = synth::corrupt(&clean, &spec)?;
        let result = run_stream(config, EstimatorKind::Robust, &data, Some(&gt), None)?;
        artifacts.warnings.extend(result.warnings.clone());
        let path = out.join(format!("delta_sum_seed_{seed}.csv"));
        let mut w = BufWriter::new(File::create(&path)?);
        writeln!(w, "t,delta_sum,lambda_min_gamma")?;
        for r in result.trace.rows() {
            if r.t > config.t0 {
                writeln!(w, "{},{},{}", r.t, r.delta_sum, r.lambda_min_gamma)?;
            }
        }
        w.flush()?;
        artifacts.add(path);
    }
    write_text(&mut artifacts, out.join("config.txt"), &config.echo())?;
    artifacts.verify()?;
    Ok(artifacts)
}

fn median(values: impl Iterator<Item = f64>) -> f64 {
    let mut v: Vec<f64> = values.collect();
    if v.is_empty() {
        return f64::NAN;
    }
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn median_of_odd_and_even() {
        assert_eq!(median([3.0, 1.0, 2.0].into_iter()), 2.0);
        assert_eq!(median([4.0, 1.0, 2.0, 3.0].into_iter()), 2.5);
    }
}
