//! Sigma-band coverage `P{|X - E X| <= sd X}`.
//!
//! Continuous families use closed forms in standardized coordinates, so
//! location and scale parameters drop out exactly. Lattice families sum
//! masses over the integers inside a band whose ends may be open, floored
//! or ceiled.

use crate::catalog::{self, perturbed_poisson_cutoff, DistSpec, POISSON_RATE};
use crate::error::{Error, Result};
use crate::specfun::{
    erfcx, gauss_2f1, ln_gamma_unchecked, normal_cdf, normal_interval, poisson_mass,
    reg_inc_beta, reg_inc_gamma_lower, CompensatedSum, EULER_GAMMA,
};
use serde::{Deserialize, Serialize};
use std::f64::consts::{PI, SQRT_2};
use std::fmt;
use std::str::FromStr;

/// `2Φ(1) - 1`.
pub const THRESHOLD_EXACT: f64 = 0.682_689_492_137_085_9;
/// The four-digit rounding of [`THRESHOLD_EXACT`].
pub const THRESHOLD_PAPER: f64 = 0.6827;

/// Error bound attached to closed-form values.
const CLOSED_FORM_ERR: f64 = 1e-13;
/// Error bound attached to compensated lattice sums.
const SUMMATION_ERR: f64 = 8.0 * f64::EPSILON;
/// Relative/absolute slack for deciding integer membership at band ends.
const ENDPOINT_TOL: f64 = 1e-12;

/// Which band the coverage is measured on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BandVariant {
    /// `mu - sd <= X <= mu + sd`
    Plain,
    /// `mu - sd < X <= mu + sd`
    GeometricCorrected,
    /// `floor(mu - sd) <= X <= mu + sd`
    NbCorrected,
    /// `floor(mu - sd) <= X <= ceil(mu + sd)`
    PoissonCorrected,
}

impl BandVariant {
    pub const ALL: [BandVariant; 4] = [
        BandVariant::Plain,
        BandVariant::GeometricCorrected,
        BandVariant::NbCorrected,
        BandVariant::PoissonCorrected,
    ];

    pub fn name(self) -> &'static str {
        match self {
            BandVariant::Plain => "plain",
            BandVariant::GeometricCorrected => "geometric-corrected",
            BandVariant::NbCorrected => "nb-corrected",
            BandVariant::PoissonCorrected => "poisson-corrected",
        }
    }

    fn ends(self) -> (EndKind, EndKind) {
        match self {
            BandVariant::Plain => (EndKind::Closed, EndKind::Closed),
            BandVariant::GeometricCorrected => (EndKind::Open, EndKind::Closed),
            BandVariant::NbCorrected => (EndKind::Floored, EndKind::Closed),
            BandVariant::PoissonCorrected => (EndKind::Floored, EndKind::Ceiled),
        }
    }
}

impl fmt::Display for BandVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for BandVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let lower = s.trim().to_ascii_lowercase().replace('_', "-");
        BandVariant::ALL
            .into_iter()
            .find(|v| v.name() == lower)
            .ok_or_else(|| Error::Parse(format!("unknown band variant '{}'", s.trim())))
    }
}

/// Treatment of one band end.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EndKind {
    Closed,
    Open,
    Floored,
    Ceiled,
}

/// `[mu - sd, mu + sd]` with per-end treatment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Band {
    pub lo: f64,
    pub hi: f64,
    pub lo_kind: EndKind,
    pub hi_kind: EndKind,
}

fn slack(x: f64) -> f64 {
    ENDPOINT_TOL.max(x.abs() * ENDPOINT_TOL)
}

impl Band {
    /// Smallest integer inside the band.
    pub fn first_integer(&self) -> i64 {
        let lo = self.lo;
        let k = match self.lo_kind {
            EndKind::Closed => (lo - slack(lo)).ceil(),
            EndKind::Open => (lo + slack(lo)).floor() + 1.0,
            EndKind::Floored => (lo + slack(lo)).floor(),
            EndKind::Ceiled => (lo - slack(lo)).ceil(),
        };
        k as i64
    }

    /// Largest integer inside the band.
    pub fn last_integer(&self) -> i64 {
        let hi = self.hi;
        let k = match self.hi_kind {
            EndKind::Closed | EndKind::Floored => (hi + slack(hi)).floor(),
            EndKind::Ceiled => (hi - slack(hi)).ceil(),
            EndKind::Open => (hi - slack(hi)).ceil() - 1.0,
        };
        k as i64
    }

    /// Band ends after floor/ceil adjustment, as real numbers.
    pub fn effective_ends(&self) -> (f64, f64) {
        let lo = match self.lo_kind {
            EndKind::Floored => self.first_integer() as f64,
            _ => self.lo,
        };
        let hi = match self.hi_kind {
            EndKind::Ceiled => self.last_integer() as f64,
            _ => self.hi,
        };
        (lo, hi)
    }
}

impl fmt::Display for Band {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (lo, hi) = self.effective_ends();
        let open = if self.lo_kind == EndKind::Open { '(' } else { '[' };
        write!(f, "{open}{lo:.10}, {hi:.10}]")
    }
}

/// How a coverage value was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    ClosedForm,
    Quadrature,
    Summation,
    MonteCarlo,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::ClosedForm => "closed_form",
            Method::Quadrature => "quadrature",
            Method::Summation => "summation",
            Method::MonteCarlo => "monte_carlo",
        })
    }
}

/// A coverage probability and an absolute error bound (standard error for
/// Monte Carlo).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoverageResult {
    pub value: f64,
    pub method: Method,
    pub err_estimate: f64,
}

impl CoverageResult {
    fn closed(value: f64) -> CoverageResult {
        CoverageResult { value: value.clamp(0.0, 1.0), method: Method::ClosedForm, err_estimate: CLOSED_FORM_ERR }
    }
}

fn incompatible(d: &DistSpec, v: BandVariant) -> Error {
    Error::IncompatibleVariant { family: d.family().name(), variant: v.name() }
}

/// Band `mu -/+ sd` with the variant's end treatment.
pub fn band(d: &DistSpec, variant: BandVariant) -> Result<Band> {
    if variant != BandVariant::Plain && !d.is_lattice() {
        return Err(incompatible(d, variant));
    }
    let m = d.moments()?;
    let sd = m.sd();
    let (lo_kind, hi_kind) = variant.ends();
    Ok(Band { lo: m.mean - sd, hi: m.mean + sd, lo_kind, hi_kind })
}

/// Closed-form coverage for continuous families.
pub fn j_closed(d: &DistSpec) -> Result<CoverageResult> {
    d.validate()?;
    let v = match *d {
        DistSpec::Gamma { alpha, .. } => j_gamma(alpha)?,
        DistSpec::Uniform { .. } => 1.0 / 3f64.sqrt(),
        DistSpec::Beta { alpha, beta } => {
            let b = band(d, BandVariant::Plain)?;
            let hi = reg_inc_beta(alpha, beta, b.hi.clamp(0.0, 1.0))?;
            let lo = reg_inc_beta(alpha, beta, b.lo.clamp(0.0, 1.0))?;
            hi - lo
        }
        DistSpec::Laplace { .. } => -(-SQRT_2).exp_m1(),
        DistSpec::Gumbel { .. } => {
            // standardized Gumbel: mean γ, sd π/√6
            let s = PI / 6f64.sqrt();
            let g = |z: f64| (-(-z).exp()).exp();
            g(EULER_GAMMA + s) - g(EULER_GAMMA - s)
        }
        DistSpec::Logistic { .. } => (PI / (2.0 * 3f64.sqrt())).tanh(),
        DistSpec::Pareto { alpha, .. } => j_pareto(alpha),
        DistSpec::Weibull { k, .. } => j_weibull(k),
        DistSpec::LogNormal { sigma, .. } => j_lognormal(sigma),
        DistSpec::StudentT { nu } => j_student_t(nu)?,
        DistSpec::InvGaussian { mu, lambda } => j_inv_gaussian((mu / lambda).sqrt()),
        DistSpec::PerturbedPoisson { eps } => return j_perturbed_poisson(eps),
        DistSpec::Geometric { .. }
        | DistSpec::NegBinomial { .. }
        | DistSpec::Poisson { .. }
        | DistSpec::CompoundPoissonUniform { .. } => {
            return Err(Error::Unsupported { family: d.family().name(), operation: "j_closed" })
        }
    };
    Ok(CoverageResult::closed(v))
}

/// `P(α, α + √α) - P(α, max(0, α - √α))`.
fn j_gamma(alpha: f64) -> Result<f64> {
    let r = alpha.sqrt();
    let hi = reg_inc_gamma_lower(alpha, alpha + r)?;
    let lo = reg_inc_gamma_lower(alpha, (alpha - r).max(0.0))?;
    Ok(hi - lo)
}

/// `1 - [α/(α-1) + √(α/(α-2))/(α-1)]^{-α}`; the band's lower end always sits
/// below x_m.
pub(crate) fn j_pareto(alpha: f64) -> f64 {
    let inc = (1.0 + (alpha / (alpha - 2.0)).sqrt()) / (alpha - 1.0);
    -(-alpha * inc.ln_1p()).exp_m1()
}

/// Standardized Weibull band ends in log form: `(ln Γ(1+1/k), cv)` with
/// cv = sd/mean.
fn weibull_log_mean_cv(k: f64) -> (f64, f64) {
    let lg1 = ln_gamma_unchecked(1.0 + 1.0 / k);
    let lg2 = ln_gamma_unchecked(1.0 + 2.0 / k);
    (lg1, (lg2 - 2.0 * lg1).exp_m1().sqrt())
}

/// Whether the `max{0, ·}` clamp on the Weibull lower band end binds.
pub fn weibull_lower_clamped(k: f64) -> bool {
    weibull_log_mean_cv(k).1 >= 1.0
}

/// `exp(-max(0, m - s)^k) - exp(-(m + s)^k)` for the unit-scale Weibull.
pub(crate) fn j_weibull(k: f64) -> f64 {
    let (lm, cv) = weibull_log_mean_cv(k);
    let upper = (-(k * (lm + cv.ln_1p())).exp()).exp();
    let lower = if cv >= 1.0 { 1.0 } else { (-(k * (lm + (-cv).ln_1p())).exp()).exp() };
    lower - upper
}

/// Φ-difference form with y = √(e^{σ²} - 1); the lower term vanishes once
/// σ ≥ √(ln 2).
pub(crate) fn j_lognormal(sigma: f64) -> f64 {
    let s2 = sigma * sigma;
    let y = s2.exp_m1().sqrt();
    let upper = (0.5 * s2 + y.ln_1p()) / sigma;
    if y >= 1.0 {
        normal_cdf(upper)
    } else {
        let lower = (0.5 * s2 + (-y).ln_1p()) / sigma;
        normal_interval(lower, upper)
    }
}

/// `2√(ν/(ν-2)) C_ν F(½, (ν+1)/2; 3/2; -1/(ν-2))`.
fn j_student_t_2f1(nu: f64) -> Result<f64> {
    let f = gauss_2f1(0.5, 0.5 * (nu + 1.0), 1.5, -1.0 / (nu - 2.0))?;
    Ok(2.0 * (nu / (nu - 2.0)).sqrt() * catalog::student_t_norm(nu) * f)
}

/// Student-t coverage through the incomplete-beta CDF.
pub fn j_student_t_incbeta(nu: f64) -> Result<f64> {
    let h = (nu / (nu - 2.0)).sqrt();
    // 1 - 2·P{T > h} with P{T > h} = ½ I_{ν/(ν+h²)}(ν/2, ½)
    Ok(1.0 - reg_inc_beta(0.5 * nu, 0.5, nu / (nu + h * h))?)
}

fn j_student_t(nu: f64) -> Result<f64> {
    let v = j_student_t_2f1(nu)?;
    if cfg!(debug_assertions) {
        let w = j_student_t_incbeta(nu)?;
        if (v - w).abs() > 1e-9 {
            return Err(Error::NonConvergence { method: "student_t_2f1_selfcheck", achieved: (v - w).abs() });
        }
    }
    Ok(v)
}

/// Inverse-Gaussian coverage in y = √(μ/λ). Each `e^{2/y²} Φ(-b)` product is
/// evaluated as `½ erfcx(b/√2) e^{-1/(2(1±y))}`.
pub(crate) fn j_inv_gaussian(y: f64) -> f64 {
    let tail = |b: f64, expo: f64| 0.5 * erfcx(b / SQRT_2).unwrap_or(0.0) * expo.exp();
    let j1 = normal_cdf(1.0 / (1.0 + y).sqrt())
        + tail((1.0 + 2.0 / y) / (1.0 + y).sqrt(), -0.5 / (1.0 + y));
    if y >= 1.0 {
        return j1;
    }
    let r = (1.0 - y).sqrt();
    let j2 = normal_cdf(-1.0 / r) + tail((2.0 / y - 1.0) / r, -0.5 / (1.0 - y));
    j1 - j2
}

/// Coverage for lattice families by summing masses over the band.
pub fn j_discrete(d: &DistSpec, variant: BandVariant) -> Result<CoverageResult> {
    if !d.is_lattice() {
        return Err(incompatible(d, variant));
    }
    let b = band(d, variant)?;
    let value = catalog::mass_between(d, b.first_integer(), b.last_integer());
    Ok(CoverageResult { value: value.clamp(0.0, 1.0), method: Method::Summation, err_estimate: SUMMATION_ERR })
}

/// `Σ_k pois(k; 3) [Φ((u-k)/ε) - Φ((l-k)/ε)]` with `l, u = 3 ∓ √(3 + ε²)`.
pub fn j_perturbed_poisson(eps: f64) -> Result<CoverageResult> {
    let d = DistSpec::PerturbedPoisson { eps };
    d.validate()?;
    let b = band(&d, BandVariant::Plain)?;
    let mut acc = CompensatedSum::default();
    for k in 0..=perturbed_poisson_cutoff() {
        let k = k as f64;
        acc.add(poisson_mass(k, POISSON_RATE) * normal_interval((b.lo - k) / eps, (b.hi - k) / eps));
    }
    Ok(CoverageResult {
        value: acc.value().clamp(0.0, 1.0),
        method: Method::ClosedForm,
        err_estimate: 1e-14 + CLOSED_FORM_ERR,
    })
}

/// Coverage by whichever exact route fits the family and variant.
pub fn coverage(d: &DistSpec, variant: BandVariant) -> Result<CoverageResult> {
    if d.is_lattice() {
        j_discrete(d, variant)
    } else if variant != BandVariant::Plain {
        Err(incompatible(d, variant))
    } else {
        j_closed(d)
    }
}
