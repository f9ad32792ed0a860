//! Online trimmed inner product estimation of the sample covariance.
//!
//! The estimator buffers the first `t0` pairwise observation products,
//! fixes per-entry trimming thresholds from their order statistics, and
//! afterwards maintains a running mean of clamped products in O(p^2)
//! memory. No mean subtraction is performed anywhere: the data model is
//! zero-mean Gaussian and the estimate targets the second-moment matrix.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// epsilon = 8*eta + 12*ln(4/delta)/t0, the total trimming fraction.
pub fn compute_epsilon(eta: f64, delta: f64, t0: usize) -> Result<f64> {
    if !(eta > 0.0 && eta < 1.0 / 32.0) {
        return Err(Error::parameter(
            "eta",
            format!("must lie in (0, 1/32), got {eta}"),
        ));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::parameter(
            "delta",
            format!("must lie in (0, 1), got {delta}"),
        ));
    }
    if t0 < 1 {
        return Err(Error::parameter("t0", "must be at least 1"));
    }
    Ok(8.0 * eta + 12.0 * (4.0 / delta).ln() / t0 as f64)
}

/// Clamp a product to the trimming interval [alpha, beta].
pub fn trim(s: f64, alpha: f64, beta: f64) -> Result<f64> {
    if alpha > beta {
        return Err(Error::parameter(
            "alpha",
            format!("lower threshold {alpha} exceeds upper threshold {beta}"),
        ));
    }
    Ok(s.clamp(alpha, beta))
}

/// Trimming thresholds as order statistics of the initialization buffer.
///
/// With the buffer sorted non-decreasingly, alpha is the ceil(eps*n)-th
/// smallest value and beta the ceil((1-eps)*n)-th, 1-based, with both
/// indices clamped into [1, n].
pub fn compute_thresholds(buffer: &[f64], epsilon: f64) -> Result<(f64, f64)> {
    let n = buffer.len();
    if n == 0 {
        return Err(Error::State("threshold computation on empty buffer".into()));
    }
    let mut sorted = buffer.to_vec();
    sorted.sort_by(f64::total_cmp);
    let i_alpha = ((epsilon * n as f64).ceil() as usize).max(1);
    let i_beta = (((1.0 - epsilon) * n as f64).ceil() as usize).min(n);
    if i_alpha > i_beta {
        return Err(Error::parameter(
            "epsilon",
            format!("trimming fraction {epsilon} leaves no interior order statistics (n = {n})"),
        ));
    }
    Ok((sorted[i_alpha - 1], sorted[i_beta - 1]))
}

/// Parameters of the trimmed estimator, with the derived trimming
/// fraction and a record of whether the concentration-bound hypotheses
/// hold at these values.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrimConfig {
    pub t0: usize,
    pub delta: f64,
    pub eta: f64,
    pub epsilon: f64,
    /// True iff t0 and delta satisfy the hypotheses under which the
    /// entrywise error bound holds. Construction succeeds either way.
    pub theory_valid: bool,
}

impl TrimConfig {
    pub fn new(t0: usize, delta: f64, eta: f64) -> Result<Self> {
        let epsilon = compute_epsilon(eta, delta, t0)?;
        let t0f = t0 as f64;
        let t0_min = (3.0 * (8.0 / delta).ln() / (2.0 * eta))
            .max(12.0 * (4.0 / delta).ln() / (0.25 - 8.0 * eta));
        let theory_valid = t0f > t0_min && delta >= 4.0 * (-t0f).exp();
        Ok(TrimConfig {
            t0,
            delta,
            eta,
            epsilon,
            theory_valid,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    Buffering,
    Initialized,
}

/// Running state of the online trimmed inner product.
///
/// Thresholds and estimates are stored as the upper triangle of a
/// symmetric p x p matrix (pair (i,j) with i <= j shares one slot with
/// (j,i) since x_i*x_j = x_j*x_i).
#[derive(Debug, Clone)]
pub struct TrimState {
    config: TrimConfig,
    p: usize,
    t: usize,
    phase: Phase,
    buffers: Vec<Vec<f64>>,
    alpha: Vec<f64>,
    beta: Vec<f64>,
    estimate: Vec<f64>,
}

/// Index of pair (i, j), i <= j, in a row-major upper-triangle layout.
#[inline]
pub fn tri_index(i: usize, j: usize, p: usize) -> usize {
    debug_assert!(i <= j && j < p);
    i * p - i * (i + 1) / 2 + j
}

pub const fn tri_len(p: usize) -> usize {
    p * (p + 1) / 2
}

impl TrimState {
    pub fn new(config: TrimConfig, p: usize) -> Result<Self> {
        if p == 0 {
            return Err(Error::parameter("p", "dimension must be positive"));
        }
        let n = tri_len(p);
        Ok(TrimState {
            config,
            p,
            t: 0,
            phase: Phase::Buffering,
            buffers: vec![Vec::with_capacity(config.t0); n],
            alpha: vec![f64::NEG_INFINITY; n],
            beta: vec![f64::INFINITY; n],
            estimate: vec![0.0; n],
        })
    }

    pub fn config(&self) -> &TrimConfig {
        &self.config
    }

    pub fn dim(&self) -> usize {
        self.p
    }

    pub fn t(&self) -> usize {
        self.t
    }

    pub fn phase(&self) -> Phase {
        self.phase
    }

    /// Feed one observation vector.
    pub fn ingest(&mut self, sample: &[f64]) -> Result<()> {
        if sample.len() != self.p {
            return Err(Error::Data(format!(
                "sample has dimension {}, state expects {}",
                sample.len(),
                self.p
            )));
        }
        if let Some(bad) = sample.iter().find(|v| !v.is_finite()) {
            return Err(Error::Data(format!("non-finite sample entry {bad}")));
        }
        let t_new = self.t + 1;
        match self.phase {
            Phase::Buffering => {
                for i in 0..self.p {
                    for j in i..self.p {
                        self.buffers[tri_index(i, j, self.p)].push(sample[i] * sample[j]);
                    }
                }
                if t_new == self.config.t0 {
                    self.initialize()?;
                }
            }
            Phase::Initialized => {
                for i in 0..self.p {
                    for j in i..self.p {
                        let k = tri_index(i, j, self.p);
                        let clamped = (sample[i] * sample[j]).clamp(self.alpha[k], self.beta[k]);
                        self.estimate[k] =
                            ((self.t as f64) * self.estimate[k] + clamped) / t_new as f64;
                    }
                }
            }
        }
        self.t = t_new;
        Ok(())
    }

    fn initialize(&mut self) -> Result<()> {
        let eps = self.config.epsilon;
        let t0 = self.config.t0 as f64;
        for k in 0..self.buffers.len() {
            let (a, b) = compute_thresholds(&self.buffers[k], eps)?;
            self.alpha[k] = a;
            self.beta[k] = b;
            let sum: f64 = self.buffers[k].iter().map(|&s| s.clamp(a, b)).sum();
            self.estimate[k] = sum / t0;
        }
        self.buffers = Vec::new();
        self.phase = Phase::Initialized;
        Ok(())
    }

    /// The running trimmed-mean estimate as a full symmetric matrix.
    pub fn current_estimate(&self) -> Result<DMatrix<f64>> {
        if self.phase != Phase::Initialized {
            return Err(Error::State(format!(
                "estimate requested at t = {} before initialization at t0 = {}",
                self.t, self.config.t0
            )));
        }
        Ok(self.triangle_to_matrix(&self.estimate))
    }

    pub fn alpha_matrix(&self) -> DMatrix<f64> {
        self.triangle_to_matrix(&self.alpha)
    }

    pub fn beta_matrix(&self) -> DMatrix<f64> {
        self.triangle_to_matrix(&self.beta)
    }

    fn triangle_to_matrix(&self, tri: &[f64]) -> DMatrix<f64> {
        let p = self.p;
        DMatrix::from_fn(p, p, |i, j| tri[tri_index(i.min(j), i.max(j), p)])
    }

    /// Flat checkpoint record: config scalars, t, phase, then the alpha,
    /// beta, and estimate triangles, all encoded as little-endian f64.
    pub fn write_checkpoint<W: std::io::Write>(&self, w: &mut W) -> Result<()> {
        let mut scalars = vec![
            self.config.t0 as f64,
            self.config.delta,
            self.config.eta,
            self.config.epsilon,
            if self.config.theory_valid { 1.0 } else { 0.0 },
            self.p as f64,
            self.t as f64,
            match self.phase {
                Phase::Buffering => 0.0,
                Phase::Initialized => 1.0,
            },
        ];
        scalars.extend_from_slice(&self.alpha);
        scalars.extend_from_slice(&self.beta);
        scalars.extend_from_slice(&self.estimate);
        for v in scalars {
            w.write_all(&v.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_checkpoint<R: std::io::Read>(r: &mut R) -> Result<Self> {
        let read_f64 = |r: &mut R| -> Result<f64> {
            let mut buf = [0u8; 8];
            r.read_exact(&mut buf)?;
            Ok(f64::from_le_bytes(buf))
        };
        let t0 = read_f64(r)? as usize;
        let delta = read_f64(r)?;
        let eta = read_f64(r)?;
        let epsilon = read_f64(r)?;
        let theory_valid = read_f64(r)? != 0.0;
        let p = read_f64(r)? as usize;
        let t = read_f64(r)? as usize;
        let phase = if read_f64(r)? != 0.0 {
            Phase::Initialized
        } else {
            Phase::Buffering
        };
        if phase == Phase::Buffering {
            return Err(Error::State(
                "checkpointing is only supported after initialization".into(),
            ));
        }
        let n = tri_len(p);
        let tri = |r: &mut R| -> Result<Vec<f64>> {
            (0..n).map(|_| read_f64(r)).collect()
        };
        let alpha = tri(r)?;
        let beta = tri(r)?;
        let estimate = tri(r)?;
        Ok(TrimState {
            config: TrimConfig {
                t0,
                delta,
                eta,
                epsilon,
                theory_valid,
            },
            p,
            t,
            phase,
            buffers: Vec::new(),
            alpha,
            beta,
            estimate,
        })
    }
}

/// Untrimmed baseline: the same running-mean recursion with thresholds
/// at +/- infinity, i.e. the plain empirical second-moment matrix.
#[derive(Debug, Clone)]
pub struct NaiveCovariance {
    p: usize,
    t: usize,
    estimate: Vec<f64>,
}

impl NaiveCovariance {
    pub fn new(p: usize) -> Self {
        NaiveCovariance {
            p,
            t: 0,
            estimate: vec![0.0; tri_len(p)],
        }
    }

    pub fn t(&self) -> usize {
        self.t
    }

    pub fn ingest(&mut self, sample: &[f64]) -> Result<()> {
        if sample.len() != self.p {
            return Err(Error::Data(format!(
                "sample has dimension {}, state expects {}",
                sample.len(),
                self.p
            )));
        }
        let t_new = (self.t + 1) as f64;
        for i in 0..self.p {
            for j in i..self.p {
                let k = tri_index(i, j, self.p);
                self.estimate[k] = ((self.t as f64) * self.estimate[k] + sample[i] * sample[j]) / t_new;
            }
        }
        self.t += 1;
        Ok(())
    }

    pub fn current_estimate(&self) -> DMatrix<f64> {
        let p = self.p;
        DMatrix::from_fn(p, p, |i, j| {
            self.estimate[tri_index(i.min(j), i.max(j), p)]
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy_config(t0: usize, epsilon: f64) -> TrimConfig {
        TrimConfig {
            t0,
            delta: 0.9,
            eta: 0.001,
            epsilon,
            theory_valid: false,
        }
    }

    #[test]
    fn epsilon_matches_hand_values() {
        let e = compute_epsilon(0.03, 0.9, 100).unwrap();
        assert!((e - 0.4190).abs() < 5e-4, "epsilon = {e}");
        let e = compute_epsilon(0.01, 0.5, 1000).unwrap();
        assert!((e - 0.10495).abs() < 5e-5, "epsilon = {e}");
    }

    #[test]
    fn epsilon_rejects_bad_parameters() {
        assert!(matches!(
            compute_epsilon(0.05, 0.9, 100),
            Err(Error::Parameter { field: "eta", .. })
        ));
        assert!(matches!(
            compute_epsilon(0.03, 1.0, 100),
            Err(Error::Parameter { field: "delta", .. })
        ));
        assert!(matches!(
            compute_epsilon(0.03, 0.9, 0),
            Err(Error::Parameter { field: "t0", .. })
        ));
    }

    #[test]
    fn trim_clamps() {
        assert_eq!(trim(3.0, -1.0, 2.0).unwrap(), 2.0);
        assert_eq!(trim(-5.0, -1.0, 2.0).unwrap(), -1.0);
        assert_eq!(trim(0.5, -1.0, 2.0).unwrap(), 0.5);
        assert!(trim(0.0, 1.0, -1.0).is_err());
    }

    #[test]
    fn thresholds_order_statistics() {
        let (a, b) = compute_thresholds(&[5.0, 1.0, 3.0, 2.0, 4.0], 0.2).unwrap();
        assert_eq!((a, b), (1.0, 4.0));
        let (a, b) = compute_thresholds(&[7.0, 7.0, 7.0, 7.0], 0.25).unwrap();
        assert_eq!((a, b), (7.0, 7.0));
        assert!(compute_thresholds(&[], 0.2).is_err());
        assert!(compute_thresholds(&[1.0, 2.0], 0.6).is_err());
    }

    #[test]
    fn thresholds_match_sort_oracle() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let buffer: Vec<f64> = (0..100)
            .map(|_| rng.sample::<f64, _>(rand_distr::StandardNormal))
            .collect();
        let mut sorted = buffer.clone();
        sorted.sort_by(f64::total_cmp);
        let (a, b) = compute_thresholds(&buffer, 0.1).unwrap();
        assert_eq!(a, sorted[9]);
        assert_eq!(b, sorted[89]);
    }

    #[test]
    fn scalar_stream_initializes_to_plain_mean() {
        // products 4 and 9; epsilon small enough that nothing is trimmed
        let config = toy_config(2, 0.4);
        let mut st = TrimState::new(config, 1).unwrap();
        st.ingest(&[2.0]).unwrap();
        assert_eq!(st.phase(), Phase::Buffering);
        st.ingest(&[3.0]).unwrap();
        assert_eq!(st.phase(), Phase::Initialized);
        let s = st.current_estimate().unwrap();
        assert!((s[(0, 0)] - 6.5).abs() < 1e-12);
        assert_eq!(st.alpha_matrix()[(0, 0)], 4.0);
        assert_eq!(st.beta_matrix()[(0, 0)], 9.0);
    }

    #[test]
    fn recursive_update_arithmetic() {
        // t=4, estimate 1.0, wide thresholds, next product 2.0 -> 1.2
        let config = toy_config(2, 0.4);
        let mut st = TrimState::new(config, 1).unwrap();
        st.ingest(&[1.0]).unwrap();
        st.ingest(&[1.0]).unwrap();
        st.alpha[0] = -10.0;
        st.beta[0] = 10.0;
        st.estimate[0] = 1.0;
        st.t = 4;
        st.ingest(&[2.0_f64.sqrt()]).unwrap();
        let s = st.current_estimate().unwrap();
        assert!((s[(0, 0)] - 1.2).abs() < 1e-12, "got {}", s[(0, 0)]);
    }

    #[test]
    fn constant_basis_stream() {
        let config = toy_config(10, 0.2);
        let mut st = TrimState::new(config, 3).unwrap();
        for _ in 0..10 {
            st.ingest(&[1.0, 0.0, 0.0]).unwrap();
        }
        let s = st.current_estimate().unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let want = if i == 0 && j == 0 { 1.0 } else { 0.0 };
                assert_eq!(s[(i, j)], want);
            }
        }
    }

    #[test]
    fn estimate_gated_before_t0() {
        let config = toy_config(5, 0.2);
        let mut st = TrimState::new(config, 2).unwrap();
        st.ingest(&[1.0, 2.0]).unwrap();
        assert!(matches!(st.current_estimate(), Err(Error::State(_))));
    }

    #[test]
    fn ingest_rejects_bad_samples() {
        let config = toy_config(5, 0.2);
        let mut st = TrimState::new(config, 2).unwrap();
        assert!(matches!(st.ingest(&[1.0]), Err(Error::Data(_))));
        assert!(matches!(st.ingest(&[1.0, f64::NAN]), Err(Error::Data(_))));
    }

    #[test]
    fn clean_gaussian_stream_recovers_identity() {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(42);
        let config = TrimConfig::new(500, 0.9, 0.001).unwrap();
        let mut st = TrimState::new(config, 2).unwrap();
        for _ in 0..10_000 {
            let x: f64 = rand::Rng::sample(&mut rng, rand_distr::StandardNormal);
            let y: f64 = rand::Rng::sample(&mut rng, rand_distr::StandardNormal);
            st.ingest(&[x, y]).unwrap();
        }
        let s = st.current_estimate().unwrap();
        let err = (&s - DMatrix::<f64>::identity(2, 2)).norm();
        assert!(err < 0.2, "Frobenius error {err}");
    }

    #[test]
    fn single_outlier_moves_estimate_by_at_most_width_over_t() {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let config = TrimConfig::new(50, 0.9, 0.01).unwrap();
        let mut clean = TrimState::new(config, 2).unwrap();
        let samples: Vec<[f64; 2]> = (0..200)
            .map(|_| {
                [
                    rand::Rng::sample(&mut rng, rand_distr::StandardNormal),
                    rand::Rng::sample(&mut rng, rand_distr::StandardNormal),
                ]
            })
            .collect();
        for s in &samples {
            clean.ingest(s).unwrap();
        }
        let mut dirty = TrimState::new(config, 2).unwrap();
        for (k, s) in samples.iter().enumerate() {
            if k == 120 {
                dirty.ingest(&[1e9, -1e9]).unwrap();
            } else {
                dirty.ingest(s).unwrap();
            }
        }
        let a = clean.current_estimate().unwrap();
        let b = dirty.current_estimate().unwrap();
        let t = samples.len() as f64;
        for i in 0..2 {
            for j in 0..2 {
                let width = clean.beta_matrix()[(i, j)] - clean.alpha_matrix()[(i, j)];
                assert!(
                    (a[(i, j)] - b[(i, j)]).abs() <= width / t + 1e-12,
                    "entry ({i},{j}) moved more than (beta-alpha)/t"
                );
            }
        }
    }

    #[test]
    fn checkpoint_round_trip() {
        let config = toy_config(4, 0.3);
        let mut st = TrimState::new(config, 3).unwrap();
        for k in 0..6 {
            st.ingest(&[k as f64, 1.0 - k as f64, 0.5]).unwrap();
        }
        let mut buf = Vec::new();
        st.write_checkpoint(&mut buf).unwrap();
        let restored = TrimState::read_checkpoint(&mut buf.as_slice()).unwrap();
        assert_eq!(restored.t(), st.t());
        assert_eq!(
            restored.current_estimate().unwrap(),
            st.current_estimate().unwrap()
        );
        assert_eq!(restored.alpha_matrix(), st.alpha_matrix());
    }
}
