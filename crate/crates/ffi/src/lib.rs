//! C ABI for the robust covariance / sparse precision estimators.
//!
//! Handles are opaque pointers created and destroyed by this library.
//! All matrix buffers are dense row-major `p * p` double arrays owned by
//! the caller. Every function returns an `RpStatus`; on error the output
//! arguments are left untouched.

use std::slice;

use robust_precision::gama::{self, GamaConfig, GamaState};
use robust_precision::trim::{TrimConfig, TrimState};
use robust_precision::Error;

/// Status codes mirroring the CLI exit codes.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RpStatus {
    /// Success.
    Ok = 0,
    /// Invalid parameter or configuration.
    Config = 2,
    /// Malformed or non-finite input data.
    Data = 3,
    /// Numerical failure (loss of positive definiteness).
    Numerical = 4,
    /// A required pointer argument was null.
    NullPointer = 5,
}

fn status_of(e: &Error) -> RpStatus {
    match e.exit_code() {
        2 => RpStatus::Config,
        3 => RpStatus::Data,
        _ => RpStatus::Numerical,
    }
}

/// Opaque handle to an online trimmed-covariance estimator.
pub struct RpTrim {
    state: TrimState,
    p: usize,
}

/// Opaque handle to an online sparse-precision solver.
pub struct RpSolver {
    state: GamaState,
    p: usize,
}

unsafe fn write_matrix(out: *mut f64, m: &nalgebra::DMatrix<f64>) {
    let p = m.nrows();
    let dst = slice::from_raw_parts_mut(out, p * p);
    for i in 0..p {
        for j in 0..p {
            dst[i * p + j] = m[(i, j)];
        }
    }
}

unsafe fn read_matrix(data: *const f64, p: usize) -> nalgebra::DMatrix<f64> {
    let src = slice::from_raw_parts(data, p * p);
    nalgebra::DMatrix::from_fn(p, p, |i, j| src[i * p + j])
}

/// Create a trimmed-covariance estimator for `p`-dimensional samples.
/// Thresholds are frozen after `t0` samples with confidence `delta` and
/// assumed corruption rate `eta`.
///
/// # Safety
/// `out` must point to writable storage for one pointer.
#[no_mangle]
pub unsafe extern "C" fn rp_trim_new(
    p: usize,
    t0: usize,
    delta: f64,
    eta: f64,
    out: *mut *mut RpTrim,
) -> RpStatus {
    if out.is_null() {
        return RpStatus::NullPointer;
    }
    let config = match TrimConfig::new(t0, delta, eta) {
        Ok(c) => c,
        Err(e) => return status_of(&e),
    };
    match TrimState::new(config, p) {
        Ok(state) => {
            *out = Box::into_raw(Box::new(RpTrim { state, p }));
            RpStatus::Ok
        }
        Err(e) => status_of(&e),
    }
}

/// Feed one observation (`p` doubles).
///
/// # Safety
/// `handle` must come from `rp_trim_new`; `sample` must point to `p`
/// readable doubles.
#[no_mangle]
pub unsafe extern "C" fn rp_trim_ingest(
    handle: *mut RpTrim,
    sample: *const f64,
    len: usize,
) -> RpStatus {
    if handle.is_null() || sample.is_null() {
        return RpStatus::NullPointer;
    }
    let trim = &mut *handle;
    if len != trim.p {
        return RpStatus::Data;
    }
    let x = slice::from_raw_parts(sample, len);
    match trim.state.ingest(x) {
        Ok(()) => RpStatus::Ok,
        Err(e) => status_of(&e),
    }
}

/// Number of samples ingested so far.
///
/// # Safety
/// `handle` must come from `rp_trim_new`.
#[no_mangle]
pub unsafe extern "C" fn rp_trim_count(handle: *const RpTrim) -> usize {
    if handle.is_null() {
        return 0;
    }
    (*handle).state.t()
}

/// Copy the current covariance estimate into `out` (row-major `p * p`).
/// Fails with `Config` status until `t0` samples have been ingested.
///
/// # Safety
/// `handle` must come from `rp_trim_new`; `out` must point to `p * p`
/// writable doubles.
#[no_mangle]
pub unsafe extern "C" fn rp_trim_estimate(handle: *const RpTrim, out: *mut f64) -> RpStatus {
    if handle.is_null() || out.is_null() {
        return RpStatus::NullPointer;
    }
    let trim = &*handle;
    match trim.state.current_estimate() {
        Ok(m) => {
            write_matrix(out, &m);
            RpStatus::Ok
        }
        Err(e) => status_of(&e),
    }
}

/// Destroy a trimmed-covariance handle. Null is ignored.
///
/// # Safety
/// `handle` must come from `rp_trim_new` and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn rp_trim_free(handle: *mut RpTrim) {
    if !handle.is_null() {
        drop(Box::from_raw(handle));
    }
}

/// Create a sparse-precision solver initialized from a `p * p` row-major
/// covariance estimate, with l1 penalty `lambda` and step-size fraction
/// `step_fraction` (in (0,1)) of the squared smallest eigenvalue.
///
/// # Safety
/// `s_hat` must point to `p * p` readable doubles; `out` must point to
/// writable storage for one pointer.
#[no_mangle]
pub unsafe extern "C" fn rp_solver_new(
    p: usize,
    s_hat: *const f64,
    lambda: f64,
    step_fraction: f64,
    out: *mut *mut RpSolver,
) -> RpStatus {
    if s_hat.is_null() || out.is_null() {
        return RpStatus::NullPointer;
    }
    if p == 0 {
        return RpStatus::Config;
    }
    let config = match GamaConfig::new(lambda, step_fraction, 1) {
        Ok(c) => c,
        Err(e) => return status_of(&e),
    };
    let s = read_matrix(s_hat, p);
    match gama::init_dual(&s, config) {
        Ok(state) => {
            *out = Box::into_raw(Box::new(RpSolver { state, p }));
            RpStatus::Ok
        }
        Err(e) => status_of(&e),
    }
}

/// Advance the solver one step with an updated covariance estimate.
///
/// # Safety
/// `handle` must come from `rp_solver_new`; `s_hat` must point to
/// `p * p` readable doubles.
#[no_mangle]
pub unsafe extern "C" fn rp_solver_step(handle: *mut RpSolver, s_hat: *const f64) -> RpStatus {
    if handle.is_null() || s_hat.is_null() {
        return RpStatus::NullPointer;
    }
    let solver = &mut *handle;
    let s = read_matrix(s_hat, solver.p);
    match solver.state.step(&s) {
        Ok(_) => RpStatus::Ok,
        Err(e) => status_of(&e),
    }
}

/// Copy the sparse precision estimate Phi into `out` (row-major `p * p`).
///
/// # Safety
/// `handle` must come from `rp_solver_new`; `out` must point to `p * p`
/// writable doubles.
#[no_mangle]
pub unsafe extern "C" fn rp_solver_precision(handle: *const RpSolver, out: *mut f64) -> RpStatus {
    if handle.is_null() || out.is_null() {
        return RpStatus::NullPointer;
    }
    write_matrix(out, (*handle).state.phi());
    RpStatus::Ok
}

/// Copy the dual variable Gamma into `out` (row-major `p * p`).
///
/// # Safety
/// Same contract as `rp_solver_precision`.
#[no_mangle]
pub unsafe extern "C" fn rp_solver_dual(handle: *const RpSolver, out: *mut f64) -> RpStatus {
    if handle.is_null() || out.is_null() {
        return RpStatus::NullPointer;
    }
    write_matrix(out, (*handle).state.gamma());
    RpStatus::Ok
}

/// Smallest eigenvalue of the current dual variable, or NaN on null.
///
/// # Safety
/// `handle` must come from `rp_solver_new`.
#[no_mangle]
pub unsafe extern "C" fn rp_solver_lambda_min(handle: *const RpSolver) -> f64 {
    if handle.is_null() {
        return f64::NAN;
    }
    gama::symmetric_eigen((*handle).state.gamma()).lambda_min()
}

/// Destroy a solver handle. Null is ignored.
///
/// # Safety
/// `handle` must come from `rp_solver_new` and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn rp_solver_free(handle: *mut RpSolver) {
    if !handle.is_null() {
        drop(Box::from_raw(handle));
    }
}

/// Library version as a static C string.
#[no_mangle]
pub extern "C" fn rp_version() -> *const std::os::raw::c_char {
    static VERSION: &str = concat!(env!("CARGO_PKG_VERSION"), "\0");
    VERSION.as_ptr() as *const _
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::ptr;

    #[test]
    fn trim_round_trip_through_c_abi() {
        unsafe {
            let mut handle: *mut RpTrim = ptr::null_mut();
            assert_eq!(rp_trim_new(2, 200, 0.5, 0.001, &mut handle), RpStatus::Ok);
            let mut rng = ChaCha8Rng::seed_from_u64(1);
            for _ in 0..500 {
                let x = [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)];
                assert_eq!(rp_trim_ingest(handle, x.as_ptr(), 2), RpStatus::Ok);
            }
            assert_eq!(rp_trim_count(handle), 500);
            let mut est = [0.0f64; 4];
            assert_eq!(rp_trim_estimate(handle, est.as_mut_ptr()), RpStatus::Ok);
            assert!((est[1] - est[2]).abs() < 1e-15);
            assert!(est[0] > 0.0 && est[3] > 0.0);
            rp_trim_free(handle);
        }
    }

    #[test]
    fn solver_reaches_feasible_estimate() {
        unsafe {
            let s = [1.0, 0.3, 0.3, 1.0];
            let mut handle: *mut RpSolver = ptr::null_mut();
            assert_eq!(
                rp_solver_new(2, s.as_ptr(), 0.15, 0.9, &mut handle),
                RpStatus::Ok
            );
            for _ in 0..200 {
                assert_eq!(rp_solver_step(handle, s.as_ptr()), RpStatus::Ok);
            }
            let mut gamma = [0.0f64; 4];
            assert_eq!(rp_solver_dual(handle, gamma.as_mut_ptr()), RpStatus::Ok);
            for (g, v) in gamma.iter().zip(s.iter()) {
                assert!((g - v).abs() <= 0.15 + 1e-12);
            }
            let mut phi = [0.0f64; 4];
            assert_eq!(rp_solver_precision(handle, phi.as_mut_ptr()), RpStatus::Ok);
            assert!(phi[0] > 0.0);
            assert!(rp_solver_lambda_min(handle) > 0.0);
            rp_solver_free(handle);
        }
    }

    #[test]
    fn error_statuses() {
        unsafe {
            let mut handle: *mut RpTrim = ptr::null_mut();
            assert_eq!(
                rp_trim_new(2, 10, 2.0, 0.001, &mut handle),
                RpStatus::Config
            );
            assert_eq!(rp_trim_new(2, 10, 0.5, 0.001, &mut handle), RpStatus::Ok);
            let bad = [f64::NAN, 0.0];
            assert_eq!(rp_trim_ingest(handle, bad.as_ptr(), 2), RpStatus::Data);
            assert_eq!(rp_trim_ingest(handle, bad.as_ptr(), 1), RpStatus::Data);
            let mut est = [0.0f64; 4];
            // still buffering: state error maps to Config
            assert_eq!(rp_trim_estimate(handle, est.as_mut_ptr()), RpStatus::Config);
            rp_trim_free(handle);
            assert_eq!(
                rp_trim_ingest(ptr::null_mut(), bad.as_ptr(), 2),
                RpStatus::NullPointer
            );
            // lambda too small to dominate the negative part of the spectrum
            let s = [1.0, 2.0, 2.0, 1.0];
            let mut sh: *mut RpSolver = ptr::null_mut();
            assert_eq!(
                rp_solver_new(2, s.as_ptr(), 0.15, 0.9, &mut sh),
                RpStatus::Config
            );
            let version = std::ffi::CStr::from_ptr(rp_version());
            assert!(!version.to_str().unwrap().is_empty());
        }
    }
}
