//! Sparse canonical correlation analysis support recovery.
//!
//! The crate builds structured Gaussian CCA models, runs the
//! clean-then-threshold and coordinate-thresholding support estimators with
//! their calibrated thresholds, computes recovery error metrics and
//! information-theoretic limit quantities, estimates the truncated
//! likelihood-ratio norm behind the conjectured computational barrier, and
//! drives a seeded Monte Carlo experiment harness.
//!
//! Start from [`model::make_rank1_model`] to build an experimental model,
//! [`recover::ct_recover_support`] for the estimation pipeline, and
//! [`bench::run_experiment`] for full sweeps. The `examples/` directory has
//! one runnable walkthrough per capability.

pub mod bench;
pub mod covariance;
pub mod error;
pub mod linalg;
pub mod lowdeg;
pub mod metrics;
pub mod model;
pub mod recover;
pub mod theory;

pub use error::{Error, Result};
