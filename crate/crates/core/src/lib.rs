//! Online robust covariance and sparse precision estimation.
//!
//! Given a stream of multivariate Gaussian observations of which an
//! unknown fraction (up to eta < 1/32 per variable pair) is arbitrarily
//! corrupted, this crate maintains:
//!
//! - a trimmed-inner-product estimate of the covariance matrix ([`trim`]),
//! - a sparse precision (inverse covariance) estimate via one
//!   dual-ascent alternating-minimization iteration per time step
//!   ([`gama`]),
//! - theoretical error-bound diagnostics evaluated on the fly
//!   ([`bounds`]),
//! - a synthetic-experiment harness ([`synth`], [`runner`]) with a CLI.
//!
//! The data model is zero-mean: no mean subtraction is performed
//! anywhere, and the covariance estimate targets the second-moment
//! matrix of the clean distribution.

pub mod bounds;
pub mod error;
pub mod gama;
pub mod runner;
pub mod synth;
pub mod trim;

pub use error::{Error, Result};
