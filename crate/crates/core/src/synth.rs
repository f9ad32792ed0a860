//! Synthetic ground truth, Gaussian stream sampling, and corruption
//! injection.
//!
//! Everything here is a pure function of its inputs and a 64-bit seed.
//! The three stages draw from decorrelated ChaCha streams (graph = 1,
//! sampling = 2, corruption = 3) of the same seed, so regenerating one
//! stage never perturbs another.

use nalgebra::DMatrix;
use rand::seq::index::sample as index_sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal, Uniform};

use crate::error::{Error, Result};
use crate::gama::{spd_inverse, symmetric_eigen};

const STREAM_GRAPH: u64 = 1;
const STREAM_SAMPLE: u64 = 2;
const STREAM_CORRUPT: u64 = 3;

fn rng_for(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// True precision matrix, its inverse, and the generated edge set.
#[derive(Debug, Clone)]
pub struct GroundTruth {
    pub theta_star: DMatrix<f64>,
    pub s_star: DMatrix<f64>,
    pub edges: Vec<(usize, usize)>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CorruptionModel {
    /// floor(eta*t) whole observation columns replaced.
    Column,
    /// floor(eta*t/2) corrupted cells per variable, random positions.
    Distributed,
    /// floor(eta*t) corrupted cells per variable, random positions.
    PerRow,
}

impl CorruptionModel {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "column" => Ok(CorruptionModel::Column),
            "distributed" => Ok(CorruptionModel::Distributed),
            "per-row" => Ok(CorruptionModel::PerRow),
            other => Err(Error::parameter(
                "corruption",
                format!("unknown model `{other}` (expected column|distributed|per-row)"),
            )),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            CorruptionModel::Column => "column",
            CorruptionModel::Distributed => "distributed",
            CorruptionModel::PerRow => "per-row",
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct CorruptionSpec {
    pub model: CorruptionModel,
    pub eta: f64,
    /// Mean of the corruption distribution N(mu, sigma^2).
    pub mu: f64,
    /// Standard deviation of the corruption distribution.
    pub sigma: f64,
    pub seed: u64,
}

impl CorruptionSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.eta >= 0.0 && self.eta < 1.0 / 32.0) {
            return Err(Error::parameter(
                "eta",
                format!("must lie in [0, 1/32), got {}", self.eta),
            ));
        }
        if self.sigma <= 0.0 {
            return Err(Error::parameter(
                "sigma",
                format!("must be positive, got {}", self.sigma),
            ));
        }
        Ok(())
    }
}

/// Boolean p x t mask of corrupted cells, kept as an audit trail.
#[derive(Debug, Clone)]
pub struct CorruptionMask {
    p: usize,
    t: usize,
    cells: Vec<bool>,
}

impl CorruptionMask {
    fn empty(p: usize, t: usize) -> Self {
        CorruptionMask {
            p,
            t,
            cells: vec![false; p * t],
        }
    }

    #[inline]
    pub fn is_corrupted(&self, row: usize, col: usize) -> bool {
        self.cells[row * self.t + col]
    }

    fn set(&mut self, row: usize, col: usize) {
        self.cells[row * self.t + col] = true;
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.p, self.t)
    }

    pub fn total(&self) -> usize {
        self.cells.iter().filter(|&&c| c).count()
    }

    pub fn row_count(&self, row: usize) -> usize {
        (0..self.t).filter(|&c| self.is_corrupted(row, c)).count()
    }

    pub fn column_count(&self, col: usize) -> usize {
        (0..self.p).filter(|&r| self.is_corrupted(r, col)).count()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.iter().all(|&c| !c)
    }

    /// Corrupted (row, col) pairs in row-major order.
    pub fn entries(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for r in 0..self.p {
            for c in 0..self.t {
                if self.is_corrupted(r, c) {
                    out.push((r, c));
                }
            }
        }
        out
    }
}

/// Sparse Erdos-Renyi ground truth: off-diagonal entries are zero with
/// probability 0.95, otherwise uniform in [-0.6,-0.3] U [0.3,0.6]; the
/// diagonal shift is chosen in closed form so lambda_min(theta*) = 1.
pub fn generate_graph(p: usize, seed: u64) -> Result<GroundTruth> {
    if p < 2 {
        return Err(Error::parameter("p", format!("dimension must be at least 2, got {p}")));
    }
    let mut rng = rng_for(seed, STREAM_GRAPH);
    let magnitude = Uniform::new_inclusive(0.3, 0.6);
    let mut a = DMatrix::<f64>::zeros(p, p);
    let mut edges = Vec::new();
    for i in 0..p {
        for j in (i + 1)..p {
            if rng.gen::<f64>() < 0.05 {
                let sign = if rng.gen::<bool>() { 1.0 } else { -1.0 };
                let v = sign * magnitude.sample(&mut rng);
                a[(i, j)] = v;
                a[(j, i)] = v;
                edges.push((i, j));
            }
        }
    }
    let lambda_min_a = symmetric_eigen(&a).lambda_min();
    // xi = 1 - lambda_min(A) - |lambda_min(A)| makes lambda_min(theta*) = 1
    let xi = 1.0 - lambda_min_a - lambda_min_a.abs();
    let theta_star = &a + DMatrix::<f64>::identity(p, p) * (xi + lambda_min_a.abs());
    let s_star = spd_inverse(&theta_star)?;
    Ok(GroundTruth {
        theta_star,
        s_star,
        edges,
    })
}

/// t i.i.d. draws from N(0, S*), one observation per column.
pub fn sample_stream(s_star: &DMatrix<f64>, t: usize, seed: u64) -> Result<DMatrix<f64>> {
    if t == 0 {
        return Err(Error::parameter("t", "stream length must be positive"));
    }
    let p = s_star.nrows();
    let chol = s_star.clone().cholesky().ok_or_else(|| {
        Error::numerical(
            "covariance factorization failed",
            symmetric_eigen(s_star).lambda_min(),
        )
    })?;
    let l = chol.l();
    let mut rng = rng_for(seed, STREAM_SAMPLE);
    let mut data = DMatrix::<f64>::zeros(p, t);
    let mut z = nalgebra::DVector::<f64>::zeros(p);
    for col in 0..t {
        for i in 0..p {
            z[i] = StandardNormal.sample(&mut rng);
        }
        data.set_column(col, &(&l * &z));
    }
    Ok(data)
}

/// Replace selected cells by draws from N(mu, sigma^2) according to the
/// corruption model. Cells outside the mask are returned bit-identical.
/// When floor(eta*t) < 1 the data is returned unchanged with an empty mask.
pub fn corrupt(data: &DMatrix<f64>, spec: &CorruptionSpec) -> Result<(DMatrix<f64>, CorruptionMask)> {
    spec.validate()?;
    let p = data.nrows();
    let t = data.ncols();
    let budget = (spec.eta * t as f64).floor() as usize;
    let mut mask = CorruptionMask::empty(p, t);
    if budget == 0 {
        return Ok((data.clone(), mask));
    }
    let mut rng = rng_for(spec.seed, STREAM_CORRUPT);
    match spec.model {
        CorruptionModel::Column => {
            let cols = index_sample(&mut rng, t, budget);
            for col in cols.iter() {
                for row in 0..p {
                    mask.set(row, col);
                }
            }
        }
        CorruptionModel::Distributed => {
            let per_row = ((spec.eta * t as f64) / 2.0).floor() as usize;
            for row in 0..p {
                for col in index_sample(&mut rng, t, per_row).iter() {
                    mask.set(row, col);
                }
            }
        }
        CorruptionModel::PerRow => {
            for row in 0..p {
                for col in index_sample(&mut rng, t, budget).iter() {
                    mask.set(row, col);
                }
            }
        }
    }
    let noise = Normal::new(spec.mu, spec.sigma)
        .map_err(|e| Error::parameter("sigma", e.to_string()))?;
    let mut out = data.clone();
    for row in 0..p {
        for col in 0..t {
            if mask.is_corrupted(row, col) {
                out[(row, col)] = noise.sample(&mut rng);
            }
        }
    }
    Ok((out, mask))
}
