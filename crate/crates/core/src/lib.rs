//! Simulation and numerical-verification toolkit for discrete-time
//! insurance/financial risk models with bivariate Sarmanov dependence.
//!
//! The crate is organised around the loss recursion
//! `S_n = sum_{i<=n} X_i * prod_{j<=i} Y_j`, where the insurance risks `X_i`
//! and the stochastic discount factors `Y_i` form i.i.d. pairs with a
//! bivariate Sarmanov joint law. It provides:
//!
//! * [`dist`] has the distribution families with exact tails, quantiles,
//!   samplers and fractional complex moments;
//! * [`sarmanov`] holds the bivariate model: validation, pair sampling and
//!   the twisted (change-of-measure) marginal;
//! * [`mellin`] computes complex fractional moments along a vertical line,
//!   geometric Mellin sums, non-vanishing scans and numerical
//!   multiplicative convolution tails;
//! * [`ruin`] does the Monte Carlo ruin-probability estimation with
//!   truncation control, plus every closed-form asymptotic constant;
//! * [`tail_stats`] covers Hill estimation, regular-variation ratio
//!   diagnostics and dominated-variation checks;
//! * [`counterexample`] assembles the vanishing-Mellin construction: an
//!   oscillating non-regularly-varying law whose product with a suitable
//!   financial risk is regularly varying.

// Guards of the form `!(x > 0.0)` are deliberate: they reject NaN along
// with the out-of-range values, which `x <= 0.0` would let through.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod counterexample;
pub mod dist;
pub mod error;
pub mod mc;
pub mod mellin;
pub mod numeric;
pub mod ruin;
pub mod sarmanov;
pub mod tail_stats;

pub use error::{Error, Result};

/// z-multiplier used for the 99% confidence intervals reported everywhere.
pub const Z99: f64 = 2.576;
