//! Experiment configuration: a flat `key = value` text file plus CLI
//! flag overrides (flags win). The resolved configuration, with every
//! default materialized, is echoed next to the run artifacts.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::gama::GamaConfig;
use crate::synth::CorruptionModel;
use crate::trim::TrimConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CovarianceSource {
    /// Sample with covariance S* = inverse of the generated precision.
    PrecisionInverse,
    /// Sample with the generated precision matrix used literally as the
    /// covariance.
    Literal,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Estimators {
    pub robust: bool,
    pub naive: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub p: usize,
    pub t: usize,
    pub t0: usize,
    pub delta: f64,
    pub eta: f64,
    pub lambda: f64,
    pub step_fraction: f64,
    pub corruption: CorruptionModel,
    pub mu: f64,
    pub sigma: f64,
    pub seeds: Vec<u64>,
    pub estimators: Estimators,
    pub checkpoints: Vec<usize>,
    pub covariance_source: CovarianceSource,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            p: 10,
            t: 5000,
            t0: 100,
            delta: 0.9,
            eta: 0.03,
            lambda: 0.15,
            step_fraction: 0.9,
            corruption: CorruptionModel::PerRow,
            mu: 1.0,
            sigma: 5.0,
            seeds: vec![0],
            estimators: Estimators {
                robust: true,
                naive: true,
            },
            checkpoints: Vec::new(),
            covariance_source: CovarianceSource::PrecisionInverse,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.p < 2 {
            return Err(Error::Config(format!("p must be at least 2, got {}", self.p)));
        }
        if self.t <= self.t0 {
            return Err(Error::Config(format!(
                "t must exceed t0, got t = {}, t0 = {}",
                self.t, self.t0
            )));
        }
        if self.seeds.is_empty() {
            return Err(Error::Config("seeds must be nonempty".into()));
        }
        if !self.estimators.robust && !self.estimators.naive {
            return Err(Error::Config("at least one estimator must be enabled".into()));
        }
        if !(self.eta >= 0.0 && self.eta < 1.0 / 32.0) {
            return Err(Error::Config(format!("eta must lie in [0, 1/32), got {}", self.eta)));
        }
        if self.sigma <= 0.0 {
            return Err(Error::Config(format!("sigma must be positive, got {}", self.sigma)));
        }
        for &cp in &self.checkpoints {
            if cp < self.t0 || cp > self.t {
                return Err(Error::Config(format!(
                    "checkpoint {cp} outside [t0, t] = [{}, {}]",
                    self.t0, self.t
                )));
            }
        }
        // delegate scalar range checks
        self.trim_config()?;
        self.gama_config()?;
        Ok(())
    }

    pub fn trim_config(&self) -> Result<TrimConfig> {
        // eta = 0 means a corruption-free run; the estimator still needs a
        // positive rate for its trimming fraction, so floor it at a value
        // that trims nothing beyond the delta term.
        let eta = if self.eta > 0.0 { self.eta } else { 1e-9 };
        TrimConfig::new(self.t0, self.delta, eta)
    }

    pub fn gama_config(&self) -> Result<GamaConfig> {
        GamaConfig::new(self.lambda, self.step_fraction, self.t0)
    }

    /// Parse a flat key = value file. Unknown keys are rejected.
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let mut config = ExperimentConfig::default();
        for (line_no, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::Config(format!("line {}: expected `key = value`", line_no + 1))
            })?;
            config
                .set(key.trim(), value.trim())
                .map_err(|e| Error::Config(format!("line {}: {e}", line_no + 1)))?;
        }
        Ok(config)
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        fn parse<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
            value
                .parse()
                .map_err(|_| Error::Config(format!("cannot parse `{value}` for key `{key}`")))
        }
        match key {
            "p" => self.p = parse(key, value)?,
            "t" => self.t = parse(key, value)?,
            "t0" => self.t0 = parse(key, value)?,
            "delta" => self.delta = parse(key, value)?,
            "eta" => self.eta = parse(key, value)?,
            "lambda" => self.lambda = parse(key, value)?,
            "step_fraction" => self.step_fraction = parse(key, value)?,
            "corruption" => self.corruption = CorruptionModel::parse(value)?,
            "mu" => self.mu = parse(key, value)?,
            "sigma" => self.sigma = parse(key, value)?,
            "seeds" => {
                self.seeds = value
                    .split(',')
                    .filter(|s| !s.trim().is_empty())
                    .map(|s| parse("seeds", s.trim()))
                    .collect::<Result<Vec<u64>>>()?;
            }
            "estimators" => {
                let mut est = Estimators {
                    robust: false,
                    naive: false,
                };
                for name in value.split(',').map(str::trim).filter(|s| !s.is_empty()) {
                    match name {
                        "robust" => est.robust = true,
                        "naive" => est.naive = true,
                        other => {
                            return Err(Error::Config(format!("unknown estimator `{other}`")))
                        }
                    }
                }
                self.estimators = est;
            }
            "checkpoints" => {
                self.checkpoints = value
                    .split(',')
                    .filter(|s| !s.trim().is_empty())
                    .map(|s| parse("checkpoints", s.trim()))
                    .collect::<Result<Vec<usize>>>()?;
            }
            "covariance_source" => {
                self.covariance_source = match value {
                    "precision_inverse" => CovarianceSource::PrecisionInverse,
                    "literal" => CovarianceSource::Literal,
                    other => {
                        return Err(Error::Config(format!("unknown covariance_source `{other}`")))
                    }
                };
            }
            other => return Err(Error::Config(format!("unknown key `{other}`"))),
        }
        Ok(())
    }

    /// Echo of the resolved configuration in the same key = value format.
    pub fn echo(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "p = {}", self.p);
        let _ = writeln!(s, "t = {}", self.t);
        let _ = writeln!(s, "t0 = {}", self.t0);
        let _ = writeln!(s, "delta = {}", self.delta);
        let _ = writeln!(s, "eta = {}", self.eta);
        let _ = writeln!(s, "lambda = {}", self.lambda);
        let _ = writeln!(s, "step_fraction = {}", self.step_fraction);
        let _ = writeln!(s, "corruption = {}", self.corruption.name());
        let _ = writeln!(s, "mu = {}", self.mu);
        let _ = writeln!(s, "sigma = {}", self.sigma);
        let seeds: Vec<String> = self.seeds.iter().map(|v| v.to_string()).collect();
        let _ = writeln!(s, "seeds = {}", seeds.join(","));
        let mut est = Vec::new();
        if self.estimators.robust {
            est.push("robust");
        }
        if self.estimators.naive {
            est.push("naive");
        }
        let _ = writeln!(s, "estimators = {}", est.join(","));
        let cps: Vec<String> = self.checkpoints.iter().map(|v| v.to_string()).collect();
        let _ = writeln!(s, "checkpoints = {}", cps.join(","));
        let _ = writeln!(
            s,
            "covariance_source = {}",
            match self.covariance_source {
                CovarianceSource::PrecisionInverse => "precision_inverse",
                CovarianceSource::Literal => "literal",
            }
        );
        s
    }
}
