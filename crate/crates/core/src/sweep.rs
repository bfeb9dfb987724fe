//! Parameter sweeps, monotonicity checks, infimum search and figure tables.

use crate::catalog::{DistSpec, Family};
use crate::error::{Error, Result};
use crate::oracle::default_workers;
use crate::sigma_band::{coverage, BandVariant, THRESHOLD_EXACT};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// Per-pair slack in [`check_monotone`].
pub const MONOTONE_TOL: f64 = 1e-12;
/// Coarse-grid size of the smooth infimum search.
pub const COARSE_POINTS: usize = 200;
/// Scan step for piecewise-constant lattice coverages.
pub const DISCRETE_STEP: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub param: f64,
    pub coverage: f64,
    pub excess: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepTable {
    pub family: Family,
    pub param: String,
    pub variant: BandVariant,
    pub threshold: f64,
    pub fixed: BTreeMap<String, f64>,
    pub rows: Vec<SweepRow>,
}

impl SweepTable {
    /// Recompute the excess column against another threshold.
    pub fn with_threshold(mut self, threshold: f64) -> SweepTable {
        self.threshold = threshold;
        for r in &mut self.rows {
            r.excess = r.coverage - threshold;
        }
        self
    }

    pub fn min_coverage(&self) -> Option<&SweepRow> {
        self.rows.iter().min_by(|a, b| a.coverage.total_cmp(&b.coverage))
    }

    pub fn max_coverage(&self) -> Option<&SweepRow> {
        self.rows.iter().max_by(|a, b| a.coverage.total_cmp(&b.coverage))
    }
}

/// `n` evenly spaced points from `lo` to `hi` inclusive.
pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..n).map(|i| if i == n - 1 { hi } else { lo + (hi - lo) * i as f64 / (n - 1) as f64 }).collect(),
    }
}

/// `n` log-evenly spaced points from `lo` to `hi` inclusive (`0 < lo`).
pub fn logspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let (a, b) = (lo.ln(), hi.ln());
    linspace(a, b, n)
        .into_iter()
        .enumerate()
        .map(|(i, t)| if i == 0 { lo } else if i == n - 1 { hi } else { t.exp() })
        .collect()
}

/// Run `f` on a pool sized by `SIGBAND_WORKERS`.
fn in_pool<R: Send>(f: impl FnOnce() -> R + Send) -> Result<R> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(default_workers())
        .build()
        .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))?;
    Ok(pool.install(f))
}

fn spec_at(family: Family, param: &str, x: f64, fixed: &BTreeMap<String, f64>) -> Result<DistSpec> {
    let mut params = fixed.clone();
    params.insert(param.to_string(), x);
    DistSpec::from_params(family, &params)
}

fn coverage_at(family: Family, param: &str, x: f64, fixed: &BTreeMap<String, f64>, variant: BandVariant) -> Result<f64> {
    Ok(coverage(&spec_at(family, param, x, fixed)?, variant)?.value)
}

/// One row per grid point, in grid order.
pub fn sweep_family(
    family: Family,
    param: &str,
    grid: &[f64],
    fixed: &BTreeMap<String, f64>,
    variant: BandVariant,
) -> Result<SweepTable> {
    if !family.keys().iter().any(|(k, _)| *k == param) {
        return Err(Error::InvalidArgument(format!("{family} has no parameter '{param}'")));
    }
    if fixed.contains_key(param) {
        return Err(Error::InvalidArgument(format!("'{param}' is both swept and fixed")));
    }
    if grid.is_empty() {
        return Err(Error::InvalidArgument("empty grid".into()));
    }
    if let Some(i) = grid.windows(2).position(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidArgument(format!("grid not strictly increasing at index {}", i + 1)));
    }
    let rows: Vec<Result<SweepRow>> = in_pool(|| {
        grid.par_iter()
            .enumerate()
            .map(|(i, &x)| {
                let c = coverage_at(family, param, x, fixed, variant)
                    .map_err(|e| Error::InvalidArgument(format!("grid point {i} ({param}={x}): {e}")))?;
                Ok(SweepRow { param: x, coverage: c, excess: c - THRESHOLD_EXACT })
            })
            .collect()
    })?;
    Ok(SweepTable {
        family,
        param: param.to_string(),
        variant,
        threshold: THRESHOLD_EXACT,
        fixed: fixed.clone(),
        rows: rows.into_iter().collect::<Result<_>>()?,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Increasing,
    Decreasing,
}

/// An adjacent pair moving against the expected direction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Violation {
    pub index: usize,
    pub param: f64,
    pub amount: f64,
}

/// Adjacent pairs that move against `direction` by more than 1e-12.
pub fn check_monotone(table: &SweepTable, direction: Direction) -> Vec<Violation> {
    table
        .rows
        .windows(2)
        .enumerate()
        .filter_map(|(i, w)| {
            let delta = w[1].coverage - w[0].coverage;
            let against = match direction {
                Direction::Increasing => -delta,
                Direction::Decreasing => delta,
            };
            (against > MONOTONE_TOL).then_some(Violation { index: i + 1, param: w[1].param, amount: against })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InfimumReport {
    pub param_at_inf: f64,
    pub inf_value: f64,
    pub attained: bool,
}

/// Locate `inf coverage` over `[lo, hi]`.
///
/// Lattice families are scanned on a 1e-4 grid. Others use a 200-point
/// coarse grid (log-spaced for wide positive ranges) and golden-section
/// refinement on the best bracket.
pub fn find_infimum(
    family: Family,
    param: &str,
    fixed: &BTreeMap<String, f64>,
    variant: BandVariant,
    lo: f64,
    hi: f64,
    tol: f64,
) -> Result<InfimumReport> {
    if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
        return Err(Error::InvalidArgument(format!("need finite lo < hi (got {lo}, {hi})")));
    }
    if !(tol > 0.0) {
        return Err(Error::InvalidArgument(format!("tol must be positive (got {tol})")));
    }
    let f = |x: f64| coverage_at(family, param, x, fixed, variant);
    let number = |n: f64| n.ceil() as usize;
    let (best_x, best_v) = if family.is_lattice() {
        let n = number((hi - lo) / DISCRETE_STEP) + 1;
        let grid = linspace(lo, hi, n);
        let table = sweep_family(family, param, &grid, fixed, variant)?;
        let r = table.min_coverage().copied().expect("nonempty grid");
        (r.param, r.coverage)
    } else {
        let log = lo > 0.0 && hi / lo >= 100.0;
        let grid = if log { logspace(lo, hi, COARSE_POINTS) } else { linspace(lo, hi, COARSE_POINTS) };
        let table = sweep_family(family, param, &grid, fixed, variant)?;
        let (i, r) = table
            .rows
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.coverage.total_cmp(&b.1.coverage))
            .expect("nonempty grid");
        let (a, b) = (grid[i.saturating_sub(1)], grid[(i + 1).min(grid.len() - 1)]);
        let (x, v) = golden_section(&f, a, b, tol, log)?;
        if v < r.coverage {
            (x, v)
        } else {
            (r.param, r.coverage)
        }
    };
    let attained = !((best_x - lo).abs() <= tol || (hi - best_x).abs() <= tol);
    Ok(InfimumReport { param_at_inf: best_x, inf_value: best_v, attained })
}

/// Golden-section minimisation on `[a, b]`, optionally in log coordinates;
/// the bracket ends themselves are also candidates.
fn golden_section<F: Fn(f64) -> Result<f64>>(f: &F, a: f64, b: f64, tol: f64, log: bool) -> Result<(f64, f64)> {
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let to = |x: f64| if log { x.ln() } else { x };
    let from = |t: f64| if log { t.exp() } else { t };
    let (mut lo, mut hi) = (to(a), to(b));
    let mut c = hi - INV_PHI * (hi - lo);
    let mut d = lo + INV_PHI * (hi - lo);
    let (mut fc, mut fd) = (f(from(c))?, f(from(d))?);
    for _ in 0..300 {
        if from(hi) - from(lo) <= tol {
            break;
        }
        if fc <= fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - INV_PHI * (hi - lo);
            fc = f(from(c))?;
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + INV_PHI * (hi - lo);
            fd = f(from(d))?;
        }
    }
    let mut best = if fc <= fd { (from(c), fc) } else { (from(d), fd) };
    for x in [a, b] {
        let v = f(x)?;
        if v < best.1 {
            best = (x, v);
        }
    }
    Ok(best)
}

/// Resolution of figures 1-8.
pub const FIGURE_POINTS: usize = 400;
/// Resolution of figure 9.
pub const FIGURE9_POINTS: usize = 1000;

fn fixed(pairs: &[(&str, f64)]) -> BTreeMap<String, f64> {
    pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect()
}

/// Family, swept parameter, grid, fixed parameters and variant of figure `id`.
pub fn figure_setup(id: u32) -> Result<(Family, &'static str, Vec<f64>, BTreeMap<String, f64>, BandVariant)> {
    let p_grid = || linspace(0.01, 0.99, FIGURE_POINTS);
    let nb = |n: f64| (Family::NegBinomial, "p", p_grid(), fixed(&[("n", n)]), BandVariant::NbCorrected);
    Ok(match id {
        1 => (Family::Beta, "beta", linspace(1.0, 20.0, FIGURE_POINTS), fixed(&[("alpha", 2.0)]), BandVariant::Plain),
        2 => (Family::Weibull, "k", linspace(1.0, 10.0, FIGURE_POINTS), fixed(&[("lambda", 1.0)]), BandVariant::Plain),
        3 => (Family::Geometric, "p", p_grid(), BTreeMap::new(), BandVariant::GeometricCorrected),
        4 => (Family::NegBinomial, "p", p_grid(), fixed(&[("n", 2.0)]), BandVariant::Plain),
        5 => nb(2.0),
        6 => nb(3.0),
        7 => nb(10.0),
        8 => nb(1000.0),
        9 => (Family::Poisson, "lambda", linspace(0.01, 100.0, FIGURE9_POINTS), BTreeMap::new(), BandVariant::PoissonCorrected),
        _ => return Err(Error::InvalidArgument(format!("figure id must be 1..=9 (got {id})"))),
    })
}

/// Table behind figure `id` with the exact threshold.
pub fn figure_dataset(id: u32) -> Result<SweepTable> {
    let (family, param, grid, fixed, variant) = figure_setup(id)?;
    sweep_family(family, param, &grid, &fixed, variant)
}

/// Table behind figure `id` with a chosen excess threshold.
pub fn figure_dataset_with_threshold(id: u32, threshold: f64) -> Result<SweepTable> {
    Ok(figure_dataset(id)?.with_threshold(threshold))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sigma_band::THRESHOLD_PAPER;

    fn nearest(t: &SweepTable, x: f64) -> SweepRow {
        *t.rows.iter().min_by(|a, b| (a.param - x).abs().total_cmp(&(b.param - x).abs())).unwrap()
    }

    #[test]
    fn grids() {
        let g = linspace(1.0, 20.0, 400);
        assert_eq!((g.len(), g[0], g[399]), (400, 1.0, 20.0));
        let l = logspace(0.05, 1e4, 200);
        assert_eq!((l[0], l[199]), (0.05, 1e4));
        assert!(l.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn beta_figure_crosses_zero() {
        let t = figure_dataset(1).unwrap();
        assert_eq!(t.rows.len(), 400);
        let neg = t.rows.iter().any(|r| r.excess < 0.0);
        let pos = t.rows.iter().any(|r| r.excess > 0.0);
        assert!(neg && pos);
    }

    #[test]
    fn weibull_sweep_at_three() {
        let g = linspace(1.0, 10.0, 200);
        let t = sweep_family(Family::Weibull, "k", &g, &fixed(&[("lambda", 1.0)]), BandVariant::Plain).unwrap();
        let r = nearest(&t, 3.0);
        assert!((r.param - 3.0).abs() < 0.03);
        let exact = sweep_family(Family::Weibull, "k", &[3.0], &fixed(&[("lambda", 1.0)]), BandVariant::Plain).unwrap();
        assert!((exact.rows[0].coverage - 0.667_713).abs() < 5e-7);
        let f2 = figure_dataset(2).unwrap();
        assert!((nearest(&f2, 3.0).excess + 0.015).abs() < 2e-3);
    }

    #[test]
    fn pareto_strictly_decreasing() {
        let t = sweep_family(Family::Pareto, "alpha", &[2.1, 3.0, 10.0, 100.0, 1e4], &fixed(&[("xm", 1.0)]), BandVariant::Plain)
            .unwrap();
        assert!(t.rows.windows(2).all(|w| w[1].coverage < w[0].coverage));
    }

    #[test]
    fn monotone_tables() {
        let none = BTreeMap::new();
        let odd: Vec<f64> = (3..=61).step_by(2).map(f64::from).collect();
        let even: Vec<f64> = (4..=60).step_by(2).map(f64::from).collect();
        for g in [odd, even] {
            let t = sweep_family(Family::StudentT, "nu", &g, &none, BandVariant::Plain).unwrap();
            assert!(check_monotone(&t, Direction::Decreasing).is_empty());
        }
        let t = sweep_family(Family::LogNormal, "sigma", &linspace(0.01, 3.0, 300), &fixed(&[("mu", 0.0)]), BandVariant::Plain)
            .unwrap();
        assert!(check_monotone(&t, Direction::Increasing).is_empty());
        assert!(!check_monotone(&t, Direction::Decreasing).is_empty());
    }

    #[test]
    fn sweep_errors() {
        let none = BTreeMap::new();
        assert!(sweep_family(Family::StudentT, "nu", &[3.0, 3.0], &none, BandVariant::Plain).is_err());
        let e = sweep_family(Family::StudentT, "nu", &[3.0, 1.5], &none, BandVariant::Plain).unwrap_err();
        assert!(e.to_string().contains("index 1"));
        let e = sweep_family(Family::StudentT, "nu", &[1.0, 3.0], &none, BandVariant::Plain).unwrap_err();
        assert!(e.to_string().contains("grid point 0"));
        assert!(sweep_family(Family::StudentT, "mu", &[3.0], &none, BandVariant::Plain).is_err());
        assert!(figure_dataset(0).is_err() && figure_dataset(10).is_err());
    }

    #[test]
    fn infimum_lognormal_and_geometric() {
        let r = find_infimum(Family::LogNormal, "sigma", &fixed(&[("mu", 0.0)]), BandVariant::Plain, 0.005, 4.0, 1e-4).unwrap();
        assert!((r.inf_value - THRESHOLD_EXACT).abs() < 2e-3);
        assert!((r.param_at_inf - 0.005).abs() <= 1e-4);
        assert!(!r.attained);
        let g = find_infimum(Family::Geometric, "p", &BTreeMap::new(), BandVariant::GeometricCorrected, 0.01, 0.999, 1e-4)
            .unwrap();
        assert!((g.inf_value - 0.75).abs() < 1e-3);
        assert!(g.param_at_inf > 0.75 && g.param_at_inf < 0.751);
    }

    #[test]
    fn figure_value_checks() {
        let f4 = figure_dataset(4).unwrap();
        assert!((nearest(&f4, 0.45).coverage - 0.633_932_6).abs() < 2e-3);
        let f3 = figure_dataset(3).unwrap();
        assert!(f3.rows.iter().all(|r| r.coverage >= 0.75 - 1e-12));
        let f9 = figure_dataset_with_threshold(9, THRESHOLD_PAPER).unwrap();
        assert_eq!(f9.rows.len(), 1000);
        assert!(f9.rows.iter().all(|r| r.excess > 0.0));
    }
}
