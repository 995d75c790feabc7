//! Simulation and estimation toolkit for semi-linear parabolic SPDEs
//!
//! ```text
//! dX_t = nu * Laplace(X_t) dt + f(X_t) dt + sigma dW_t
//! ```
//!
//! on a bounded interval, driven by white, Riesz-kernel or spectral noise.
//! The crate simulates trajectories with a semi-implicit Euler scheme,
//! estimates the reaction function f pointwise with a data-driven two-sided
//! kernel estimator (including confidence intervals and tests), and checks
//! the spatial-ergodicity statistics (spatial averages, occupation times,
//! marginal-density envelopes) that drive the estimator's analysis.
//!
//! Modules:
//! * [`model`]  - problem definition, noise couplings sigma(nu), scaling oracles
//! * [`simulate`] - finite-difference scheme, noise sampling, analytic oracles
//! * [`estimate`] - the pointwise reaction estimator and its inference
//! * [`ergodics`] - spatial averages, occupation time, density diagnostics
//! * [`harness`] - Monte-Carlo experiment drivers with CSV/gnuplot output

pub mod error;
pub mod model;
pub mod simulate;
pub mod estimate;
pub mod ergodics;
pub mod harness;
pub mod stats;

mod par;

pub use error::{Error, Result};
