//! Monte-Carlo band coverage with per-sample counter-based streams.
//!
//! Hits are counted as integers, so the estimate is bit-identical for any
//! worker count.

use super::rng::Stream;
use crate::catalog::{DistSpec, POISSON_RATE};
use crate::error::{Error, Result};
use crate::sigma_band::{band, BandVariant};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Minimum sample count accepted by the estimators.
pub const MIN_SAMPLES: u64 = 10_000;
/// Two-sided 99% standard-normal quantile.
pub const Z99: f64 = 2.575_829_303_548_900_4;
/// Largest Poisson mean the inversion sampler accepts.
const MAX_POISSON_MEAN: f64 = 700.0;

/// A Bernoulli-proportion estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub estimate: f64,
    pub stderr: f64,
    pub n_samples: u64,
    pub seed: u64,
}

impl McEstimate {
    fn from_hits(hits: u64, n_samples: u64, seed: u64) -> McEstimate {
        let estimate = hits as f64 / n_samples as f64;
        let stderr = (estimate * (1.0 - estimate) / n_samples as f64).sqrt();
        McEstimate { estimate, stderr, n_samples, seed }
    }

    /// Normal-approximation 99% interval.
    pub fn ci99(&self) -> (f64, f64) {
        (self.estimate - Z99 * self.stderr, self.estimate + Z99 * self.stderr)
    }
}

/// Worker count from `SIGBAND_WORKERS`, defaulting to the available cores.
pub fn default_workers() -> usize {
    std::env::var("SIGBAND_WORKERS")
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|n| *n > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1))
}

fn check_samples(n_samples: u64) -> Result<()> {
    if n_samples < MIN_SAMPLES {
        Err(Error::InvalidArgument(format!("n_samples must be at least {MIN_SAMPLES} (got {n_samples})")))
    } else {
        Ok(())
    }
}

/// Count indices in `0..n` for which `hit(Stream)` is true.
fn count_hits<F>(n: u64, seed: u64, workers: usize, hit: F) -> Result<u64>
where
    F: Fn(&mut Stream) -> bool + Sync,
{
    const CHUNK: u64 = 1 << 14;
    let chunks = n.div_ceil(CHUNK);
    let run = || {
        (0..chunks)
            .into_par_iter()
            .map(|c| {
                let end = ((c + 1) * CHUNK).min(n);
                (c * CHUNK..end).filter(|&i| hit(&mut Stream::new(seed, i))).count() as u64
            })
            .sum::<u64>()
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))?;
    Ok(pool.install(run))
}

/// Coverage of `Y = Σ_{i ≤ N} U_i`, `N ~ Poisson(3)`, `U_i ~ U[1 - 1/n, 1 + 1/n]`.
pub fn j_mc_compound_poisson(n: u32, n_samples: u64, seed: u64) -> Result<McEstimate> {
    j_mc_compound_poisson_with_workers(n, n_samples, seed, default_workers())
}

pub fn j_mc_compound_poisson_with_workers(n: u32, n_samples: u64, seed: u64, workers: usize) -> Result<McEstimate> {
    let d = DistSpec::CompoundPoissonUniform { n };
    d.validate()?;
    check_samples(n_samples)?;
    let b = band(&d, BandVariant::Plain)?;
    let h = 1.0 / n as f64;
    let hits = count_hits(n_samples, seed, workers, |s| {
        let count = s.next_poisson(POISSON_RATE);
        let mut y = 0.0;
        for _ in 0..count {
            y += 1.0 - h + 2.0 * h * s.next_open01();
        }
        y >= b.lo && y <= b.hi
    })?;
    Ok(McEstimate::from_hits(hits, n_samples, seed))
}

/// Plain-band coverage for Poisson, Geometric and PerturbedPoisson.
pub fn j_mc_generic(d: &DistSpec, n_samples: u64, seed: u64) -> Result<McEstimate> {
    j_mc_generic_with_workers(d, n_samples, seed, default_workers())
}

pub fn j_mc_generic_with_workers(d: &DistSpec, n_samples: u64, seed: u64, workers: usize) -> Result<McEstimate> {
    d.validate()?;
    check_samples(n_samples)?;
    let b = band(d, BandVariant::Plain)?;
    let inside = move |x: f64| x >= b.lo && x <= b.hi;
    let hits = match *d {
        DistSpec::Poisson { lambda } if lambda <= MAX_POISSON_MEAN => {
            count_hits(n_samples, seed, workers, |s| inside(s.next_poisson(lambda) as f64))?
        }
        DistSpec::Geometric { p } => {
            let lq = (-p).ln_1p();
            count_hits(n_samples, seed, workers, |s| inside((s.next_open01().ln() / lq).floor()))?
        }
        DistSpec::PerturbedPoisson { eps } => count_hits(n_samples, seed, workers, |s| {
            let k = s.next_poisson(POISSON_RATE) as f64;
            inside(k + eps * s.next_normal())
        })?,
        DistSpec::CompoundPoissonUniform { n } => {
            return j_mc_compound_poisson_with_workers(n, n_samples, seed, workers)
        }
        _ => return Err(Error::Unsupported { family: d.family().name(), operation: "j_mc_generic" }),
    };
    Ok(McEstimate::from_hits(hits, n_samples, seed))
}
