//! Independent estimators of band coverage: adaptive quadrature of the
//! density, incomplete-function CDFs for lattice laws, and Monte Carlo.

pub mod montecarlo;
pub mod quadrature;
pub mod rng;

pub use montecarlo::{
    default_workers, j_mc_compound_poisson, j_mc_compound_poisson_with_workers, j_mc_generic,
    j_mc_generic_with_workers, McEstimate,
};

use crate::catalog::{pdf_or_pmf, DistSpec};
use crate::error::{Error, Result};
use crate::sigma_band::{band, BandVariant, CoverageResult, Method};
use crate::specfun::{reg_inc_beta, reg_inc_gamma_upper};
use quadrature::{integrate_panels, Panel};

/// Smallest tolerance [`j_quadrature`] accepts.
pub const MIN_QUAD_TOL: f64 = 1e-13;

/// Power-law exponents of integrable density singularities at the support
/// ends, as substitution powers `p` (density ~ distance^{1/p - 1}).
fn end_singularities(d: &DistSpec) -> (Option<f64>, Option<f64>) {
    match *d {
        DistSpec::Gamma { alpha, .. } if alpha < 1.0 => (Some(1.0 / alpha), None),
        DistSpec::Weibull { k, .. } if k < 1.0 => (Some(1.0 / k), None),
        DistSpec::Beta { alpha, beta } => {
            (if alpha < 1.0 { Some(1.0 / alpha) } else { None }, if beta < 1.0 { Some(1.0 / beta) } else { None })
        }
        _ => (None, None),
    }
}

/// Panels over `[lo, hi]` split at interior landmarks, using power maps at
/// support ends where the density is singular.
fn coverage_panels(d: &DistSpec, lo: f64, hi: f64) -> Vec<Panel> {
    let (s_lo, s_hi) = d.support();
    let (p_left, p_right) = end_singularities(d);
    let p_left = p_left.filter(|_| lo == s_lo);
    let p_right = p_right.filter(|_| hi == s_hi);
    let mut edges = vec![lo];
    let mut inner: Vec<f64> = d.landmarks().into_iter().filter(|x| *x > lo && *x < hi).collect();
    if inner.is_empty() && p_left.is_some() && p_right.is_some() {
        inner.push(0.5 * (lo + hi));
    }
    inner.sort_by(f64::total_cmp);
    inner.dedup();
    edges.extend(inner);
    edges.push(hi);
    let last = edges.len() - 2;
    edges
        .windows(2)
        .enumerate()
        .map(|(i, w)| match (i, p_left, p_right) {
            (0, Some(p), _) => Panel::PowerLeft { a: w[0], w: w[1] - w[0], p },
            (i, _, Some(p)) if i == last => Panel::PowerRight { b: w[1], w: w[1] - w[0], p },
            _ => Panel::Finite { a: w[0], b: w[1] },
        })
        .collect()
}

/// Coverage by adaptive quadrature of the density over the band clipped to
/// the support.
pub fn j_quadrature(d: &DistSpec, tol: f64) -> Result<CoverageResult> {
    if !(tol >= MIN_QUAD_TOL) {
        return Err(Error::InvalidArgument(format!("tol must be at least {MIN_QUAD_TOL:e} (got {tol})")));
    }
    if d.is_lattice() || matches!(d, DistSpec::CompoundPoissonUniform { .. }) {
        return Err(Error::Unsupported { family: d.family().name(), operation: "j_quadrature" });
    }
    let b = band(d, BandVariant::Plain)?;
    let (s_lo, s_hi) = d.support();
    let (lo, hi) = (b.lo.max(s_lo), b.hi.min(s_hi));
    let panels = coverage_panels(d, lo, hi);
    let dist = *d;
    let q = integrate_panels(move |x| pdf_or_pmf(&dist, x).unwrap_or(0.0), &panels, tol)?;
    Ok(CoverageResult { value: q.value, method: Method::Quadrature, err_estimate: q.error })
}

/// `P{X <= k}` for lattice families through regularized incomplete
/// functions (no mass summation).
pub fn lattice_cdf_incomplete(d: &DistSpec, k: i64) -> Result<f64> {
    if k < 0 {
        return Ok(0.0);
    }
    let k1 = k as f64 + 1.0;
    match *d {
        DistSpec::Poisson { lambda } => reg_inc_gamma_upper(k1, lambda),
        DistSpec::NegBinomial { n, p } => reg_inc_beta(n as f64, k1, p),
        DistSpec::Geometric { p } => Ok(-(k1 * (-p).ln_1p()).exp_m1()),
        _ => Err(Error::Unsupported { family: d.family().name(), operation: "lattice_cdf_incomplete" }),
    }
}

/// Lattice band coverage as a difference of incomplete-function CDFs.
pub fn j_incomplete(d: &DistSpec, variant: BandVariant) -> Result<CoverageResult> {
    let b = band(d, variant)?;
    let (first, last) = (b.first_integer().max(0), b.last_integer());
    let value = if last < first {
        0.0
    } else {
        lattice_cdf_incomplete(d, last)? - lattice_cdf_incomplete(d, first - 1)?
    };
    Ok(CoverageResult { value: value.clamp(0.0, 1.0), method: Method::ClosedForm, err_estimate: 1e-13 })
}
