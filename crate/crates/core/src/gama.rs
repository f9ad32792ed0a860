//! Online graphical alternating minimization.
//!
//! One dual-ascent iteration per incoming covariance estimate: the dual
//! variable Gamma stays elementwise within lambda of the covariance, the
//! dense primal Omega is its inverse, and the sparse precision estimate
//! Phi is obtained by soft-thresholding.

use nalgebra::DMatrix;

use crate::bounds;
use crate::error::{Error, Result};

/// sign(x) * max(|x| - lambda, 0), elementwise on matrices.
pub fn soft_threshold(x: f64, lambda: f64) -> f64 {
    debug_assert!(lambda >= 0.0);
    x.signum() * (x.abs() - lambda).max(0.0)
}

/// Projection of x onto [-lambda, lambda].
///
/// Computed as the complement x - soft_threshold(x, lambda) so that the
/// decomposition x = S(x) + C(x) holds bit-exactly; the result agrees
/// with min(max(x, -lambda), lambda) to within one ulp of x.
pub fn clip(x: f64, lambda: f64) -> f64 {
    x - soft_threshold(x, lambda)
}

pub fn soft_threshold_matrix(m: &DMatrix<f64>, lambda: f64) -> DMatrix<f64> {
    m.map(|x| soft_threshold(x, lambda))
}

pub fn clip_matrix(m: &DMatrix<f64>, lambda: f64) -> DMatrix<f64> {
    m.map(|x| clip(x, lambda))
}

/// Eigendecomposition of a symmetric matrix with eigenvalues sorted
/// non-decreasingly.
pub struct SymmetricEigenResult {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: DMatrix<f64>,
}

impl SymmetricEigenResult {
    pub fn lambda_min(&self) -> f64 {
        self.eigenvalues[0]
    }

    pub fn lambda_max(&self) -> f64 {
        *self.eigenvalues.last().unwrap()
    }

    pub fn logdet(&self) -> f64 {
        self.eigenvalues.iter().map(|v| v.ln()).sum()
    }
}

pub fn symmetric_eigen(m: &DMatrix<f64>) -> SymmetricEigenResult {
    let eig = m.clone().symmetric_eigen();
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let eigenvalues: Vec<f64> = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let p = m.nrows();
    let eigenvectors = DMatrix::from_fn(p, p, |i, j| eig.eigenvectors[(i, order[j])]);
    SymmetricEigenResult {
        eigenvalues,
        eigenvectors,
    }
}

/// Inverse of a symmetric positive-definite matrix, Cholesky first with
/// an eigendecomposition fallback that clamps eigenvalues at 1e-12.
pub fn spd_inverse(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if let Some(chol) = m.clone().cholesky() {
        let inv = chol.inverse();
        // enforce exact symmetry of the result
        return Ok(symmetrize(&inv));
    }
    let eig = symmetric_eigen(m);
    let lambda_min = eig.lambda_min();
    if eig.lambda_max() <= 0.0 {
        return Err(Error::numerical(
            "matrix is not positive definite",
            lambda_min,
        ));
    }
    let p = m.nrows();
    let mut inv = DMatrix::zeros(p, p);
    for k in 0..p {
        let v = eig.eigenvectors.column(k);
        inv += v * v.transpose() / eig.eigenvalues[k].max(1e-12);
    }
    Ok(symmetrize(&inv))
}

pub fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

/// One dual update: clip(Gamma - S + zeta * Gamma^{-1}) + S.
pub fn dual_update(
    gamma_prev: &DMatrix<f64>,
    s_hat: &DMatrix<f64>,
    zeta_prev: f64,
    lambda: f64,
) -> Result<DMatrix<f64>> {
    let omega_prev = spd_inverse(gamma_prev)?;
    let arg = gamma_prev - s_hat + omega_prev * zeta_prev;
    Ok(symmetrize(&(clip_matrix(&arg, lambda) + s_hat)))
}

/// Dense primal update: Omega = Gamma^{-1}.
pub fn omega_update(gamma: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    spd_inverse(gamma)
}

/// Sparse primal update: Phi = (1/zeta) * soft_threshold(zeta*Omega - S + Gamma).
pub fn phi_update(
    omega: &DMatrix<f64>,
    s_hat: &DMatrix<f64>,
    gamma: &DMatrix<f64>,
    zeta: f64,
    lambda: f64,
) -> Result<DMatrix<f64>> {
    if zeta <= 0.0 {
        return Err(Error::parameter("zeta", format!("must be positive, got {zeta}")));
    }
    let arg = omega * zeta - s_hat + gamma;
    Ok(symmetrize(&(soft_threshold_matrix(&arg, lambda) / zeta)))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GamaConfig {
    /// l1 penalty lambda.
    pub lambda: f64,
    /// Fraction c of lambda_min(Gamma)^2 used as step size.
    pub step_fraction: f64,
    /// Initialization step count; must match the covariance estimator's.
    pub t0: usize,
    /// Inner dual-ascent iterations per time step. The online algorithm
    /// uses 1; larger values are for fixed-point solves on constant input.
    pub refine: usize,
}

impl GamaConfig {
    pub fn new(lambda: f64, step_fraction: f64, t0: usize) -> Result<Self> {
        if lambda <= 0.0 {
            return Err(Error::parameter("lambda", format!("must be positive, got {lambda}")));
        }
        if !(step_fraction > 0.0 && step_fraction < 1.0) {
            return Err(Error::parameter(
                "step_fraction",
                format!("must lie in (0, 1), got {step_fraction}"),
            ));
        }
        if t0 < 1 {
            return Err(Error::parameter("t0", "must be at least 1"));
        }
        Ok(GamaConfig {
            lambda,
            step_fraction,
            t0,
            refine: 1,
        })
    }

    pub fn with_refine(mut self, refine: usize) -> Self {
        self.refine = refine.max(1);
        self
    }
}

/// Per-step scalars exposed to the trace sink.
#[derive(Debug, Clone, Copy)]
pub struct StepDiagnostics {
    pub lambda_min_gamma: f64,
    pub lambda_max_gamma: f64,
    pub zeta: f64,
    /// Descent term Delta_t from the eigenvalue-bound bookkeeping.
    pub delta: f64,
    /// Amount by which Delta_t exceeds the log-det decrease
    /// logdet(Gamma_t) - logdet(Gamma_{t+1}); nonnegative whenever the
    /// step size satisfies its bound. The running sum of this slack is
    /// the bounded "error terms" quantity: the raw Delta sum telescopes
    /// to it plus the log-det drift.
    pub slack: f64,
    /// max_ij |Gamma_ij - S_ij|, feasible iff <= lambda.
    pub dual_gap: f64,
}

#[derive(Debug, Clone)]
pub struct GamaState {
    config: GamaConfig,
    gamma: DMatrix<f64>,
    omega: DMatrix<f64>,
    phi: DMatrix<f64>,
    zeta: f64,
    logdet_gamma: f64,
    t: usize,
}

/// Initialize the dual variable Gamma = S + lambda*I and the primal pair.
pub fn init_dual(s_hat: &DMatrix<f64>, config: GamaConfig) -> Result<GamaState> {
    let p = s_hat.nrows();
    let s_min = symmetric_eigen(s_hat).lambda_min();
    let min_lambda = (-s_min).max(0.0);
    if config.lambda <= min_lambda {
        return Err(Error::Penalty {
            min_lambda: min_lambda + 1e-6,
        });
    }
    let gamma = s_hat + DMatrix::<f64>::identity(p, p) * config.lambda;
    let eig = symmetric_eigen(&gamma);
    let gamma_min = eig.lambda_min();
    let zeta = config.step_fraction * gamma_min * gamma_min;
    let omega = omega_update(&gamma)?;
    let phi = phi_update(&omega, s_hat, &gamma, zeta, config.lambda)?;
    Ok(GamaState {
        config,
        gamma,
        omega,
        phi,
        zeta,
        logdet_gamma: eig.logdet(),
        t: config.t0,
    })
}

impl GamaState {
    pub fn config(&self) -> &GamaConfig {
        &self.config
    }

    pub fn gamma(&self) -> &DMatrix<f64> {
        &self.gamma
    }

    pub fn omega(&self) -> &DMatrix<f64> {
        &self.omega
    }

    /// The sparse precision estimate, the algorithm's canonical output.
    pub fn phi(&self) -> &DMatrix<f64> {
        &self.phi
    }

    pub fn zeta(&self) -> f64 {
        self.zeta
    }

    pub fn t(&self) -> usize {
        self.t
    }

    /// Advance one time step with the current covariance estimate.
    pub fn step(&mut self, s_hat: &DMatrix<f64>) -> Result<StepDiagnostics> {
        let mut diag = StepDiagnostics {
            lambda_min_gamma: 0.0,
            lambda_max_gamma: 0.0,
            zeta: self.zeta,
            delta: 0.0,
            slack: 0.0,
            dual_gap: 0.0,
        };
        let mut delta_sum = 0.0;
        let mut slack_sum = 0.0;
        for _ in 0..self.config.refine {
            let gamma_next = dual_update(&self.gamma, s_hat, self.zeta, self.config.lambda)?;
            let delta = bounds::delta_term(&gamma_next, &self.gamma, &self.omega, self.zeta)?;
            delta_sum += delta;
            let eig = symmetric_eigen(&gamma_next);
            let gamma_min = eig.lambda_min();
            if gamma_min <= 0.0 {
                return Err(Error::Penalty {
                    min_lambda: self.config.lambda + (-gamma_min) + 1e-6,
                });
            }
            let omega = omega_update(&gamma_next)?;
            let phi = phi_update(&omega, s_hat, &gamma_next, self.zeta, self.config.lambda)?;
            let logdet_next = eig.logdet();
            slack_sum += delta + logdet_next - self.logdet_gamma;
            self.gamma = gamma_next;
            self.omega = omega;
            self.phi = phi;
            self.logdet_gamma = logdet_next;
            diag.zeta = self.zeta;
            diag.lambda_min_gamma = gamma_min;
            diag.lambda_max_gamma = eig.lambda_max();
            self.zeta = self.config.step_fraction * gamma_min * gamma_min;
        }
        diag.delta = delta_sum;
        diag.slack = slack_sum;
        diag.dual_gap = (&self.gamma - s_hat).amax();
        self.t += 1;
        Ok(diag)
    }

    /// Flat checkpoint record mirroring the covariance estimator's:
    /// config scalars, t, zeta, then the gamma, omega, phi upper
    /// triangles as little-endian f64.
    pub fn write_checkpoint<W: std::io::Write>(&self, w: &mut W) -> Result<()> {
        let p = self.gamma.nrows();
        let mut scalars = vec![
            self.config.lambda,
            self.config.step_fraction,
            self.config.t0 as f64,
            self.config.refine as f64,
            p as f64,
            self.t as f64,
            self.zeta,
        ];
        for m in [&self.gamma, &self.omega, &self.phi] {
            for i in 0..p {
                for j in i..p {
                    scalars.push(m[(i, j)]);
                }
            }
        }
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
        let lambda = read_f64(r)?;
        let step_fraction = read_f64(r)?;
        let t0 = read_f64(r)? as usize;
        let refine = read_f64(r)? as usize;
        let p = read_f64(r)? as usize;
        let t = read_f64(r)? as usize;
        let zeta = read_f64(r)?;
        let mut mats = Vec::with_capacity(3);
        for _ in 0..3 {
            let mut m = DMatrix::<f64>::zeros(p, p);
            for i in 0..p {
                for j in i..p {
                    let v = read_f64(r)?;
                    m[(i, j)] = v;
                    m[(j, i)] = v;
                }
            }
            mats.push(m);
        }
        let phi = mats.pop().unwrap();
        let omega = mats.pop().unwrap();
        let gamma = mats.pop().unwrap();
        let logdet_gamma = symmetric_eigen(&gamma).logdet();
        Ok(GamaState {
            config: GamaConfig {
                lambda,
                step_fraction,
                t0,
                refine,
            },
            gamma,
            omega,
            phi,
            zeta,
            logdet_gamma,
            t,
        })
    }
}

/// Iterate the dual update with a constant covariance input until the
/// iterates are stationary. Used to obtain the reference fixed point
/// Gamma* for dual-error traces and convergence diagnostics.
pub fn solve_dual_fixed_point(
    s_star: &DMatrix<f64>,
    config: GamaConfig,
    tol: f64,
    max_steps: usize,
) -> Result<GamaState> {
    let mut state = init_dual(s_star, config)?;
    for _ in 0..max_steps {
        let prev = state.gamma.clone();
        state.step(s_star)?;
        if (&state.gamma - prev).norm() < tol {
            return Ok(state);
        }
    }
    Err(Error::numerical(
        format!("dual fixed point did not reach tolerance {tol} in {max_steps} steps"),
        symmetric_eigen(&state.gamma).lambda_min(),
    ))
}
