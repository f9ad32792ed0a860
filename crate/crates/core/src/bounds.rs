//! Theoretical quantities evaluated as runtime diagnostics: the
//! entrywise covariance error bound, the asymptotic Frobenius bound,
//! the dual contraction rate, and the descent bookkeeping behind the
//! eigenvalue bounds. Nothing here is asserted a priori; the runner
//! records these alongside the observed errors.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::trim::compute_epsilon;

/// Standard deviation of the (i,j)-th sample covariance entry under the
/// Wishart model: sqrt(S*_ij^2 + S*_ii * S*_jj).
pub fn sigma_entry(s_star: &DMatrix<f64>, i: usize, j: usize) -> Result<f64> {
    let p = s_star.nrows();
    if i >= p || j >= p {
        return Err(Error::parameter(
            "index",
            format!("({i},{j}) out of range for {p}x{p} matrix"),
        ));
    }
    Ok((s_star[(i, j)].powi(2) + s_star[(i, i)] * s_star[(j, j)]).sqrt())
}

/// max_ij sigma_entry.
pub fn sigma_max(s_star: &DMatrix<f64>) -> f64 {
    let p = s_star.nrows();
    let mut m: f64 = 0.0;
    for i in 0..p {
        for j in 0..p {
            m = m.max(sigma_entry(s_star, i, j).unwrap());
        }
    }
    m
}

/// High-probability entrywise error bound for the trimmed covariance:
/// (sqrt(2) + sqrt(6)/9) * sigma * sqrt(ln(4/delta)/t)
///   + (43*sqrt(2)/12) * sigma * sqrt(epsilon).
pub fn theorem1_bound(t: usize, t0: usize, delta: f64, eta: f64, sigma: f64) -> Result<f64> {
    if t < t0 {
        return Err(Error::parameter(
            "t",
            format!("bound is defined for t >= t0, got t = {t}, t0 = {t0}"),
        ));
    }
    let epsilon = compute_epsilon(eta, delta, t0)?;
    let c1 = 2.0_f64.sqrt() + 6.0_f64.sqrt() / 9.0;
    let c2 = 43.0 * 2.0_f64.sqrt() / 12.0;
    Ok(c1 * sigma * ((4.0 / delta).ln() / t as f64).sqrt() + c2 * sigma * epsilon.sqrt())
}

/// Asymptotic Frobenius bound on the covariance error:
/// (43/6) * p * sigma_max * sqrt(4*eta + 6*ln(4/delta)/t0).
pub fn corollary_frobenius_bound(
    p: usize,
    sigma_max: f64,
    eta: f64,
    delta: f64,
    t0: usize,
) -> Result<f64> {
    // reuse the epsilon range checks
    compute_epsilon(eta, delta, t0)?;
    Ok(43.0 / 6.0 * p as f64 * sigma_max * (4.0 * eta + 6.0 * (4.0 / delta).ln() / t0 as f64).sqrt())
}

/// Dual contraction rate and whether it actually contracts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContractionRate {
    pub rate: f64,
    pub contractive: bool,
}

/// r = max(|1 - zeta/a^2|, |1 - zeta/b^2|) for eigenvalue bounds
/// a <= b of the dual iterates.
pub fn contraction_rate(a: f64, b: f64, zeta: f64) -> Result<ContractionRate> {
    if !(a > 0.0 && b >= a) {
        return Err(Error::parameter(
            "a",
            format!("need 0 < a <= b, got a = {a}, b = {b}"),
        ));
    }
    if zeta <= 0.0 {
        return Err(Error::parameter("zeta", format!("must be positive, got {zeta}")));
    }
    let rate = (1.0 - zeta / (a * a)).abs().max((1.0 - zeta / (b * b)).abs());
    Ok(ContractionRate {
        rate,
        contractive: rate < 1.0,
    })
}

/// Descent term Delta_t = tr((Gamma_{t+1} - Gamma_t)(-Omega_t))
///   + (1/(2 zeta_t)) ||Gamma_{t+1} - Gamma_t||_F^2.
pub fn delta_term(
    gamma_next: &DMatrix<f64>,
    gamma: &DMatrix<f64>,
    omega: &DMatrix<f64>,
    zeta: f64,
) -> Result<f64> {
    if gamma_next.shape() != gamma.shape() || gamma.shape() != omega.shape() {
        return Err(Error::Data(format!(
            "shape mismatch: {:?} vs {:?} vs {:?}",
            gamma_next.shape(),
            gamma.shape(),
            omega.shape()
        )));
    }
    if zeta <= 0.0 {
        return Err(Error::parameter("zeta", format!("must be positive, got {zeta}")));
    }
    let diff = gamma_next - gamma;
    let trace = (&diff * (-omega)).trace();
    Ok(trace + diff.norm_squared() / (2.0 * zeta))
}

/// ||estimate - truth||_F.
pub fn frobenius_error(estimate: &DMatrix<f64>, truth: &DMatrix<f64>) -> Result<f64> {
    if estimate.shape() != truth.shape() {
        return Err(Error::Data(format!(
            "shape mismatch: {:?} vs {:?}",
            estimate.shape(),
            truth.shape()
        )));
    }
    Ok((estimate - truth).norm())
}

/// One row of the error trace.
#[derive(Debug, Clone, Copy)]
pub struct TraceRow {
    pub t: usize,
    pub cov_err: f64,
    pub prec_err: f64,
    /// NaN when no reference dual fixed point is available.
    pub dual_err: f64,
    pub thm1_bound: f64,
    pub cor2_bound: f64,
    pub lambda_min_gamma: f64,
    /// Running sum of the per-step descent slack (Delta_t minus the
    /// log-det decrease). Bounded iff the Delta sum is bounded relative
    /// to the log-det drift; this is the eigenvalue-bound diagnostic.
    pub delta_sum: f64,
}

/// Time-indexed record of observed errors and bound values.
#[derive(Debug, Clone, Default)]
pub struct ErrorTrace {
    rows: Vec<TraceRow>,
}

impl ErrorTrace {
    pub fn new() -> Self {
        ErrorTrace { rows: Vec::new() }
    }

    pub fn push(&mut self, row: TraceRow) -> Result<()> {
        if let Some(last) = self.rows.last() {
            if row.t <= last.t {
                return Err(Error::State(format!(
                    "trace rows must have strictly increasing t ({} after {})",
                    row.t, last.t
                )));
            }
        }
        for (name, v) in [
            ("cov_err", row.cov_err),
            ("prec_err", row.prec_err),
            ("thm1_bound", row.thm1_bound),
            ("cor2_bound", row.cor2_bound),
        ] {
            if v < 0.0 {
                return Err(Error::State(format!("negative {name} in trace row")));
            }
        }
        self.rows.push(row);
        Ok(())
    }

    pub fn rows(&self) -> &[TraceRow] {
        &self.rows
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub const CSV_HEADER: &'static str =
        "t,cov_err,prec_err,dual_err,thm1_bound,cor2_bound,lambda_min_gamma,delta_sum";

    pub fn write_csv<W: std::io::Write>(&self, w: &mut W) -> Result<()> {
        writeln!(w, "{}", Self::CSV_HEADER)?;
        for r in &self.rows {
            writeln!(
                w,
                "{},{},{},{},{},{},{},{}",
                r.t,
                r.cov_err,
                r.prec_err,
                r.dual_err,
                r.thm1_bound,
                r.cor2_bound,
                r.lambda_min_gamma,
                r.delta_sum
            )?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sigma_entry_values() {
        let i2 = DMatrix::<f64>::identity(2, 2);
        assert!((sigma_entry(&i2, 0, 0).unwrap() - 2.0_f64.sqrt()).abs() < 1e-15);
        assert_eq!(sigma_entry(&i2, 0, 1).unwrap(), 1.0);
        let d = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![4.0, 1.0]));
        assert_eq!(sigma_entry(&d, 0, 1).unwrap(), 2.0);
        assert!(sigma_entry(&d, 0, 2).is_err());
    }

    #[test]
    fn theorem1_bound_values() {
        let b = theorem1_bound(100, 100, 0.9, 0.03, 1.0).unwrap();
        assert!((b - 3.486).abs() < 2e-3, "bound = {b}");
        assert_eq!(theorem1_bound(100, 100, 0.9, 0.03, 0.0).unwrap(), 0.0);
        // decreasing in t toward the epsilon term
        let far = theorem1_bound(100_000_000, 100, 0.9, 0.03, 1.0).unwrap();
        let eps = compute_epsilon(0.03, 0.9, 100).unwrap();
        let tail = 43.0 * 2.0_f64.sqrt() / 12.0 * eps.sqrt();
        assert!(far > tail && far < tail + 1e-2);
        assert!(theorem1_bound(99, 100, 0.9, 0.03, 1.0).is_err());
    }

    #[test]
    fn theorem1_bound_monotone() {
        let mut prev = f64::INFINITY;
        for t in [100, 200, 400, 800, 1600] {
            let b = theorem1_bound(t, 100, 0.9, 0.03, 1.0).unwrap();
            assert!(b < prev);
            prev = b;
        }
        // increasing in sigma
        assert!(
            theorem1_bound(200, 100, 0.9, 0.03, 2.0).unwrap()
                > theorem1_bound(200, 100, 0.9, 0.03, 1.0).unwrap()
        );
    }

    #[test]
    fn corollary_bound_values() {
        assert_eq!(corollary_frobenius_bound(10, 0.0, 0.03, 0.9, 100).unwrap(), 0.0);
        let b1 = corollary_frobenius_bound(10, 2.0_f64.sqrt(), 0.03, 0.9, 100).unwrap();
        assert!((b1 - 46.38).abs() < 0.05, "bound = {b1}");
        let b2 = corollary_frobenius_bound(20, 2.0_f64.sqrt(), 0.03, 0.9, 100).unwrap();
        assert!((b2 - 2.0 * b1).abs() < 1e-12);
    }

    #[test]
    fn contraction_rate_values() {
        let r = contraction_rate(1.0, 2.0, 0.8).unwrap();
        assert!((r.rate - 0.8).abs() < 1e-15 && r.contractive);
        let r = contraction_rate(1.5, 1.5, 2.25).unwrap();
        assert_eq!(r.rate, 0.0);
        let r = contraction_rate(1.0, 1.0, 2.5).unwrap();
        assert_eq!(r.rate, 1.5);
        assert!(!r.contractive);
        assert!(contraction_rate(0.0, 1.0, 0.5).is_err());
        assert!(contraction_rate(1.0, 2.0, 0.0).is_err());
    }

    #[test]
    fn delta_term_values() {
        let i2 = DMatrix::<f64>::identity(2, 2);
        assert_eq!(delta_term(&i2, &i2, &i2, 0.5).unwrap(), 0.0);
        // Gamma_next = Gamma + e*I, Omega = I: -2e + (1/(2 zeta)) * 2 e^2
        let e = 0.3;
        let zeta = 0.7;
        let next = &i2 + &i2 * e;
        let got = delta_term(&next, &i2, &i2, zeta).unwrap();
        let want = -2.0 * e + 2.0 * e * e / (2.0 * zeta);
        assert!((got - want).abs() < 1e-14);
        let i3 = DMatrix::<f64>::identity(3, 3);
        assert!(delta_term(&i3, &i2, &i2, 0.5).is_err());
    }

    #[test]
    fn frobenius_error_matches_sum_of_squares() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(2);
        let a = DMatrix::from_fn(4, 4, |_, _| rng.gen::<f64>());
        let b = DMatrix::from_fn(4, 4, |_, _| rng.gen::<f64>());
        assert_eq!(frobenius_error(&a, &a).unwrap(), 0.0);
        let i2 = DMatrix::<f64>::identity(2, 2);
        assert!((frobenius_error(&i2, &DMatrix::zeros(2, 2)).unwrap() - 2.0_f64.sqrt()).abs() < 1e-15);
        let mut ss = 0.0;
        for i in 0..4 {
            for j in 0..4 {
                ss += (a[(i, j)] - b[(i, j)]).powi(2);
            }
        }
        assert!((frobenius_error(&a, &b).unwrap() - ss.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn trace_enforces_increasing_time() {
        let mut trace = ErrorTrace::new();
        let row = TraceRow {
            t: 5,
            cov_err: 1.0,
            prec_err: 1.0,
            dual_err: f64::NAN,
            thm1_bound: 2.0,
            cor2_bound: 3.0,
            lambda_min_gamma: 0.5,
            delta_sum: 0.0,
        };
        trace.push(row).unwrap();
        assert!(trace.push(row).is_err());
    }
}
