#ifndef ROBUST_PRECISION_H
#define ROBUST_PRECISION_H

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status codes mirroring the CLI exit codes.
 */
typedef enum RpStatus {
  /**
   * Success.
   */
  RpStatus_Ok = 0,
  /**
   * Invalid parameter or configuration.
   */
  RpStatus_Config = 2,
  /**
   * Malformed or non-finite input data.
   */
  RpStatus_Data = 3,
  /**
   * Numerical failure (loss of positive definiteness).
   */
  RpStatus_Numerical = 4,
  /**
   * A required pointer argument was null.
   */
  RpStatus_NullPointer = 5,
} RpStatus;

/**
 * Opaque handle to an online sparse-precision solver.
 */
typedef struct RpSolver RpSolver;

/**
 * Opaque handle to an online trimmed-covariance estimator.
 */
typedef struct RpTrim RpTrim;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Create a trimmed-covariance estimator for `p`-dimensional samples.
 * Thresholds are frozen after `t0` samples with confidence `delta` and
 * assumed corruption rate `eta`.
 *
 * # Safety
 * `out` must point to writable storage for one pointer.
 */
enum RpStatus rp_trim_new(uintptr_t p, uintptr_t t0, double delta, double eta, struct RpTrim **out);

/**
 * Feed one observation (`p` doubles).
 *
 * # Safety
 * `handle` must come from `rp_trim_new`; `sample` must point to `p`
 * readable doubles.
 */
enum RpStatus rp_trim_ingest(struct RpTrim *handle, const double *sample, uintptr_t len);

/**
 * Number of samples ingested so far.
 *
 * # Safety
 * `handle` must come from `rp_trim_new`.
 */
uintptr_t rp_trim_count(const struct RpTrim *handle);

/**
 * Copy the current covariance estimate into `out` (row-major `p * p`).
 * Fails with `Config` status until `t0` samples have been ingested.
 *
 * # Safety
 * `handle` must come from `rp_trim_new`; `out` must point to `p * p`
 * writable doubles.
 */
enum RpStatus rp_trim_estimate(const struct RpTrim *handle, double *out);

/**
 * Destroy a trimmed-covariance handle. Null is ignored.
 *
 * # Safety
 * `handle` must come from `rp_trim_new` and not be used afterwards.
 */
void rp_trim_free(struct RpTrim *handle);

/**
 * Create a sparse-precision solver initialized from a `p * p` row-major
 * covariance estimate, with l1 penalty `lambda` and step-size fraction
 * `step_fraction` (in (0,1)) of the squared smallest eigenvalue.
 *
 * # Safety
 * `s_hat` must point to `p * p` readable doubles; `out` must point to
 * writable storage for one pointer.
 */
enum RpStatus rp_solver_new(uintptr_t p,
                            const double *s_hat,
                            double lambda,
                            double step_fraction,
                            struct RpSolver **out);

/**
 * Advance the solver one step with an updated covariance estimate.
 *
 * # Safety
 * `handle` must come from `rp_solver_new`; `s_hat` must point to
 * `p * p` readable doubles.
 */
enum RpStatus rp_solver_step(struct RpSolver *handle, const double *s_hat);

/**
 * Copy the sparse precision estimate Phi into `out` (row-major `p * p`).
 *
 * # Safety
 * `handle` must come from `rp_solver_new`; `out` must point to `p * p`
 * writable doubles.
 */
enum RpStatus rp_solver_precision(const struct RpSolver *handle, double *out);

/**
 * Copy the dual variable Gamma into `out` (row-major `p * p`).
 *
 * # Safety
 * Same contract as `rp_solver_precision`.
 */
enum RpStatus rp_solver_dual(const struct RpSolver *handle, double *out);

/**
 * Smallest eigenvalue of the current dual variable, or NaN on null.
 *
 * # Safety
 * `handle` must come from `rp_solver_new`.
 */
double rp_solver_lambda_min(const struct RpSolver *handle);

/**
 * Destroy a solver handle. Null is ignored.
 *
 * # Safety
 * `handle` must come from `rp_solver_new` and not be used afterwards.
 */
void rp_solver_free(struct RpSolver *handle);

/**
 * Library version as a static C string.
 */
const char *rp_version(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* ROBUST_PRECISION_H */
