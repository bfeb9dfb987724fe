//! Sigma-band coverage toolkit.
//!
//! Computes `P{|X - E[X]| <= sqrt(Var X)}` for a catalog of probability
//! distributions, by closed form and by independent numerical oracles
//! (adaptive quadrature, exact mass summation, Monte Carlo), and compares the
//! result against the normal-distribution value `2Φ(1) - 1 ≈ 0.6827`.
//!
//! Module map:
//! - [`specfun`]: special functions (log-gamma, erfc/erfcx, incomplete gamma
//!   and beta, Gauss ₂F₁ for non-positive arguments).
//! - [`catalog`]: the distribution families with moments, CDF and density.
//! - [`sigma_band`]: band construction and closed-form coverage.
//! - [`oracle`]: quadrature, incomplete-function and Monte-Carlo cross-checks.
//! - [`sweep`]: parameter sweeps, monotonicity, infimum search, figure data.
//! - [`report`]: verification records, CSV/SVG output, the full check suite.
//! - [`cli`]: the `sigband` command line.

// `!(x > 0.0)` is used deliberately so NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::type_complexity)]

pub mod catalog;
pub mod cli;
pub mod error;
pub mod oracle;
pub mod report;
pub mod sigma_band;
pub mod specfun;
pub mod sweep;

pub use catalog::{DistSpec, Family, Moments};
pub use error::{Error, Result};
pub use sigma_band::{
    band, coverage, j_closed, j_discrete, j_perturbed_poisson, Band, BandVariant, CoverageResult,
    EndKind, Method, THRESHOLD_EXACT, THRESHOLD_PAPER,
};
