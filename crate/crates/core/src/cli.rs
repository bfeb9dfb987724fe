//! Command-line front end.
//!
//! Exit codes: 0 success, 1 verification or numerical failure, 2 usage,
//! input or I/O error.

use crate::catalog::{DistSpec, Family, ParsedSpec};
use crate::error::Error;
use crate::oracle::{
    j_incomplete, j_mc_compound_poisson, j_mc_generic, j_quadrature, McEstimate, MIN_QUAD_TOL,
};
use crate::report::{table_to_csv, table_to_svg, verify_all, ThresholdChoice, VerifyConfig};
use crate::sigma_band::{band, coverage, BandVariant, CoverageResult};
use crate::sweep::{figure_dataset_with_threshold, find_infimum, linspace, logspace, sweep_family, SweepTable};
use clap::{Args, Parser, Subcommand};
use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

#[derive(Debug, Parser)]
#[command(name = "sigband", version, about = "Coverage of the one-sigma band P{|X - EX| <= sd X} against 2*Phi(1) - 1")]
struct Cli {
    #[command(flatten)]
    flags: Flags,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args, Default)]
struct Flags {
    /// Band variant: plain, geometric-corrected, nb-corrected, poisson-corrected
    #[arg(long, global = true)]
    variant: Option<String>,
    /// Closed-form vs oracle tolerance [default: 1e-9]
    #[arg(long, global = true)]
    tol: Option<f64>,
    /// Monte Carlo seed [default: 42]
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Monte Carlo sample count [default: 1000000]
    #[arg(long, global = true)]
    samples: Option<u64>,
    /// Write the table as CSV to this path
    #[arg(long, global = true)]
    csv: Option<PathBuf>,
    /// Write an SVG plot of excess vs parameter to this path
    #[arg(long, global = true)]
    svg: Option<PathBuf>,
    /// Write the verification report (JSON) to this path
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Threshold: exact (2*Phi(1) - 1) or paper (rounded 0.6827) [default: exact]
    #[arg(long, global = true)]
    threshold: Option<String>,
    /// Config file with `key = value` lines
    #[arg(long, global = true)]
    config: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Moments, band and coverage of one distribution
    Check { spec: String },
    /// Run the built-in verification suite
    VerifyAll,
    /// Coverage over a parameter grid
    Sweep {
        spec: String,
        #[command(flatten)]
        range: Range,
        #[arg(long, default_value_t = 100)]
        points: usize,
        /// Log-spaced grid
        #[arg(long)]
        log: bool,
    },
    /// Infimum of coverage over a parameter range
    Inf {
        spec: String,
        #[command(flatten)]
        range: Range,
    },
    /// Data behind figure ID (1-9)
    Fig { id: u32 },
    /// Monte Carlo coverage estimate
    Mc { spec: String },
}

#[derive(Debug, Args)]
struct Range {
    #[arg(long)]
    param: String,
    #[arg(long, allow_negative_numbers = true)]
    lo: f64,
    #[arg(long, allow_negative_numbers = true)]
    hi: f64,
}

/// Resolved settings after merging CLI flags, config file and defaults.
#[derive(Debug, Clone)]
struct Settings {
    variant: BandVariant,
    tol: f64,
    seed: u64,
    samples: u64,
    csv: Option<PathBuf>,
    svg: Option<PathBuf>,
    out: Option<PathBuf>,
    threshold: ThresholdChoice,
}

enum Failure {
    Usage(String),
    Io(String),
    Numeric(String),
    Verification,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::NonConvergence { .. } => Failure::Numeric(e.to_string()),
            _ => Failure::Usage(e.to_string()),
        }
    }
}

type Outcome = std::result::Result<(), Failure>;

const CONFIG_KEYS: [&str; 8] = ["variant", "tol", "seed", "samples", "csv", "svg", "out", "threshold"];

fn read_config(path: &Path) -> std::result::Result<Vec<(String, String)>, Failure> {
    let text = std::fs::read_to_string(path).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))?;
    let mut entries = Vec::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Failure::Usage(format!("{}:{}: expected key = value", path.display(), n + 1)))?;
        let key = k.trim().to_ascii_lowercase().replace('_', "-");
        if !CONFIG_KEYS.contains(&key.as_str()) {
            return Err(Failure::Usage(format!("{}:{}: unknown key '{}'", path.display(), n + 1, k.trim())));
        }
        entries.push((key, v.trim().to_string()));
    }
    Ok(entries)
}

fn parse_value<T: std::str::FromStr>(key: &str, v: &str) -> std::result::Result<T, Failure> {
    v.parse().map_err(|_| Failure::Usage(format!("invalid value for {key}: '{v}'")))
}

fn resolve(flags: &Flags) -> std::result::Result<Settings, Failure> {
    let mut f = Flags {
        variant: flags.variant.clone(),
        tol: flags.tol,
        seed: flags.seed,
        samples: flags.samples,
        csv: flags.csv.clone(),
        svg: flags.svg.clone(),
        out: flags.out.clone(),
        threshold: flags.threshold.clone(),
        config: None,
    };
    if let Some(path) = &flags.config {
        for (key, v) in read_config(path)? {
            match key.as_str() {
                "variant" => f.variant = f.variant.or(Some(v)),
                "tol" => f.tol = f.tol.or(Some(parse_value("tol", &v)?)),
                "seed" => f.seed = f.seed.or(Some(parse_value("seed", &v)?)),
                "samples" => f.samples = f.samples.or(Some(parse_value::<f64>("samples", &v).and_then(as_count)?)),
                "csv" => f.csv = f.csv.or(Some(v.into())),
                "svg" => f.svg = f.svg.or(Some(v.into())),
                "out" => f.out = f.out.or(Some(v.into())),
                _ => f.threshold = f.threshold.or(Some(v)),
            }
        }
    }
    let variant = match f.variant {
        Some(v) => v.parse().map_err(Failure::from)?,
        None => BandVariant::Plain,
    };
    let threshold = match f.threshold {
        Some(t) => t.parse().map_err(Failure::from)?,
        None => ThresholdChoice::Exact,
    };
    let tol = f.tol.unwrap_or(1e-9);
    if !(tol > 0.0 && tol.is_finite()) {
        return Err(Failure::Usage(format!("tol must be positive and finite (got {tol})")));
    }
    let samples = f.samples.unwrap_or(1_000_000);
    Ok(Settings { variant, tol, seed: f.seed.unwrap_or(42), samples, csv: f.csv, svg: f.svg, out: f.out, threshold })
}

/// Sample counts in config files may be written as `1e6`.
fn as_count(x: f64) -> std::result::Result<u64, Failure> {
    if x >= 1.0 && x.fract() == 0.0 && x <= 1e15 {
        Ok(x as u64)
    } else {
        Err(Failure::Usage(format!("samples must be a positive integer (got {x})")))
    }
}

fn write_file(path: &Path, contents: &str) -> Outcome {
    std::fs::write(path, contents).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))
}

fn io(e: std::io::Error) -> Failure {
    Failure::Io(e.to_string())
}

/// Parse arguments and run; returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    run_with(args, &mut stdout.lock(), &mut stderr.lock())
}

/// As [`run`], writing to the given streams.
pub fn run_with<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            let text = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion | ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand
                    if e.exit_code() == 0 =>
                {
                    let _ = write!(out, "{text}");
                    0
                }
                _ => {
                    let _ = write!(err, "{text}");
                    2
                }
            };
        }
    };
    let result = std::panic::catch_unwind(std::panic::AssertUnwindSafe(|| dispatch(&cli, out)));
    let outcome = match result {
        Ok(o) => o,
        Err(_) => Err(Failure::Numeric("internal error".into())),
    };
    let _ = out.flush();
    match outcome {
        Ok(()) => 0,
        Err(Failure::Verification) => 1,
        Err(Failure::Numeric(m)) => {
            let _ = writeln!(err, "error: {m}");
            1
        }
        Err(Failure::Usage(m)) | Err(Failure::Io(m)) => {
            let _ = writeln!(err, "error: {m}");
            2
        }
    }
}

fn dispatch(cli: &Cli, out: &mut dyn Write) -> Outcome {
    let s = resolve(&cli.flags)?;
    match &cli.command {
        Command::Check { spec } => cmd_check(spec, &s, out),
        Command::VerifyAll => cmd_verify_all(&s, out),
        Command::Sweep { spec, range, points, log } => cmd_sweep(spec, range, *points, *log, &s, out),
        Command::Inf { spec, range } => cmd_inf(spec, range, &s, out),
        Command::Fig { id } => cmd_fig(*id, &s, out),
        Command::Mc { spec } => cmd_mc(spec, &s, out),
    }
}

fn fmt_prob(x: f64) -> String {
    format!("{x:.7} ({x:?})")
}

fn oracle_for(d: &DistSpec, s: &Settings) -> crate::error::Result<(CoverageResult, &'static str)> {
    if d.is_lattice() {
        Ok((j_incomplete(d, s.variant)?, "incomplete-function CDF"))
    } else {
        Ok((j_quadrature(d, (0.1 * s.tol).max(MIN_QUAD_TOL))?, "quadrature"))
    }
}

fn cmd_check(text: &str, s: &Settings, out: &mut dyn Write) -> Outcome {
    let d: DistSpec = text.parse()?;
    let t = s.threshold.value();
    if let DistSpec::CompoundPoissonUniform { n } = d {
        writeln!(out, "family: {}", d.family()).map_err(io)?;
        writeln!(out, "spec: {d}").map_err(io)?;
        if s.variant != BandVariant::Plain {
            return Err(Error::IncompatibleVariant { family: d.family().name(), variant: s.variant.name() }.into());
        }
        let m = j_mc_compound_poisson(n, s.samples, s.seed)?;
        write_mc(&m, t, s.threshold, out)?;
        return Ok(());
    }
    let m = d.moments()?;
    let b = band(&d, s.variant)?;
    let c = coverage(&d, s.variant)?;
    writeln!(out, "family: {}", d.family()).map_err(io)?;
    writeln!(out, "spec: {d}").map_err(io)?;
    writeln!(out, "mean: {:?}  variance: {:?}  sd: {:?}", m.mean, m.variance, m.sd()).map_err(io)?;
    writeln!(out, "band ({}): {b}  mean -/+ sd = [{:?}, {:?}]", s.variant, b.lo, b.hi).map_err(io)?;
    writeln!(out, "coverage ({}): {}", c.method, fmt_prob(c.value)).map_err(io)?;
    let (o, name) = oracle_for(&d, s)?;
    writeln!(out, "oracle ({name}): {}  |diff| = {:.3e}", fmt_prob(o.value), (o.value - c.value).abs()).map_err(io)?;
    let rel = if c.value > t { "exceeds" } else { "does not exceed" };
    writeln!(out, "threshold ({}): {t:?}  coverage {rel} it (difference {:+.3e})", threshold_name(s.threshold), c.value - t)
        .map_err(io)?;
    Ok(())
}

fn threshold_name(t: ThresholdChoice) -> &'static str {
    match t {
        ThresholdChoice::Exact => "exact",
        ThresholdChoice::Paper => "paper",
    }
}

fn write_mc(m: &McEstimate, t: f64, choice: ThresholdChoice, out: &mut dyn Write) -> Outcome {
    let (lo, hi) = m.ci99();
    writeln!(out, "mc estimate: {}  stderr: {:.3e}  samples: {}  seed: {}", fmt_prob(m.estimate), m.stderr, m.n_samples, m.seed)
        .map_err(io)?;
    writeln!(out, "99% interval: [{lo:.7}, {hi:.7}]").map_err(io)?;
    let rel = if hi < t { "below" } else if lo > t { "above" } else { "straddles" };
    writeln!(out, "threshold ({}): {t:?}  interval is {rel} it", threshold_name(choice)).map_err(io)?;
    Ok(())
}

fn cmd_verify_all(s: &Settings, out: &mut dyn Write) -> Outcome {
    let cfg = VerifyConfig { tol: s.tol, seed: s.seed, samples: s.samples, threshold: s.threshold };
    let report = verify_all(&cfg);
    for r in &report.records {
        let params: Vec<String> = r.params.iter().map(|(k, v)| format!("{k}={v}")).collect();
        writeln!(
            out,
            "{} {:<24} {:<26} {:<40} closed={:.10} oracle={:.10} diff={:.2e} tol={:.1e} exceeds={} expected={}",
            if r.pass { "PASS" } else { "FAIL" },
            r.kind,
            r.family,
            params.join(","),
            r.coverage_closed,
            r.coverage_oracle,
            r.abs_diff,
            r.tolerance,
            r.exceeds_threshold,
            r.expected_exceeds
        )
        .map_err(io)?;
    }
    writeln!(out, "summary: {} passed, {} failed, {} total", report.summary.passed, report.summary.failed, report.summary.total)
        .map_err(io)?;
    if let Some(path) = &s.out {
        write_file(path, &report.to_json()?)?;
    }
    if report.all_pass() {
        Ok(())
    } else {
        Err(Failure::Verification)
    }
}

fn emit_table(table: &SweepTable, title: &str, s: &Settings, out: &mut dyn Write) -> Outcome {
    let csv = table_to_csv(table);
    match &s.csv {
        Some(p) => write_file(p, &csv)?,
        None => out.write_all(csv.as_bytes()).map_err(io)?,
    }
    if let Some(p) = &s.svg {
        write_file(p, &table_to_svg(table, title))?;
    }
    Ok(())
}

fn parsed_range(text: &str, r: &Range) -> std::result::Result<(Family, std::collections::BTreeMap<String, f64>), Failure> {
    let p: ParsedSpec = text.parse()?;
    if !(r.lo.is_finite() && r.hi.is_finite() && r.lo < r.hi) {
        return Err(Failure::Usage(format!("need finite --lo < --hi (got {}, {})", r.lo, r.hi)));
    }
    Ok((p.family, p.params))
}

fn cmd_sweep(text: &str, r: &Range, points: usize, log: bool, s: &Settings, out: &mut dyn Write) -> Outcome {
    let (family, fixed) = parsed_range(text, r)?;
    if points < 2 {
        return Err(Failure::Usage("--points must be at least 2".into()));
    }
    if log && r.lo <= 0.0 {
        return Err(Failure::Usage("--log needs --lo > 0".into()));
    }
    let grid = if log { logspace(r.lo, r.hi, points) } else { linspace(r.lo, r.hi, points) };
    let table = sweep_family(family, &r.param, &grid, &fixed, s.variant)?.with_threshold(s.threshold.value());
    emit_table(&table, &format!("{family} coverage excess vs {}", r.param), s, out)
}

fn cmd_inf(text: &str, r: &Range, s: &Settings, out: &mut dyn Write) -> Outcome {
    let (family, fixed) = parsed_range(text, r)?;
    let tol = if family.is_lattice() { 1e-4 } else { (r.hi - r.lo).abs().min(1.0) * 1e-4 };
    let rep = find_infimum(family, &r.param, &fixed, s.variant, r.lo, r.hi, tol)?;
    let t = s.threshold.value();
    writeln!(
        out,
        "inf = {} at {} = {:?} attained={}",
        fmt_prob(rep.inf_value),
        r.param,
        rep.param_at_inf,
        rep.attained
    )
    .map_err(io)?;
    writeln!(out, "threshold ({}): {t:?}  inf - threshold = {:+.3e}", threshold_name(s.threshold), rep.inf_value - t)
        .map_err(io)?;
    Ok(())
}

fn cmd_fig(id: u32, s: &Settings, out: &mut dyn Write) -> Outcome {
    let table = figure_dataset_with_threshold(id, s.threshold.value())?;
    emit_table(&table, &format!("figure {id}: {} coverage excess vs {}", table.family, table.param), s, out)
}

fn cmd_mc(text: &str, s: &Settings, out: &mut dyn Write) -> Outcome {
    let d: DistSpec = text.parse()?;
    let m = match d {
        DistSpec::CompoundPoissonUniform { n } => j_mc_compound_poisson(n, s.samples, s.seed)?,
        _ => j_mc_generic(&d, s.samples, s.seed)?,
    };
    let t = s.threshold.value();
    writeln!(out, "spec: {d}").map_err(io)?;
    write_mc(&m, t, s.threshold, out)?;
    if let Some(p) = &s.csv {
        let row = format!("param,coverage,excess\n{:.16e},{:.16e},{:.16e}\n", m.n_samples as f64, m.estimate, m.estimate - t);
        write_file(p, &row)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn call(args: &[&str]) -> (i32, String, String) {
        let mut o = Vec::new();
        let mut e = Vec::new();
        let code = run_with(std::iter::once("sigband").chain(args.iter().copied()), &mut o, &mut e);
        (code, String::from_utf8(o).unwrap(), String::from_utf8(e).unwrap())
    }

    #[test]
    fn help_and_usage_codes() {
        assert_eq!(call(&["--help"]).0, 0);
        assert_eq!(call(&["--version"]).0, 0);
        assert_eq!(call(&[]).0, 2);
        assert_eq!(call(&["frobnicate"]).0, 2);
        assert_eq!(call(&["check"]).0, 2);
        assert_eq!(call(&["check", "laplace", "--tol", "abc"]).0, 2);
    }

    #[test]
    fn check_messages() {
        let (code, out, _) = call(&["check", "laplace:mu=0,b=1"]);
        assert_eq!(code, 0);
        assert!(out.contains("0.7568833"), "{out}");
        let (code, _, err) = call(&["check", "pareto:xm=1,alpha=1.5"]);
        assert_eq!(code, 2);
        assert!(err.contains("alpha must exceed 2"), "{err}");
        assert_eq!(call(&["check", "laplace:mu=0,b=1", "--variant", "nb-corrected"]).0, 2);
        assert_eq!(call(&["check", "nosuch:x=1"]).0, 2);
        assert_eq!(call(&["check", "poisson:lambda=3", "--variant", "sideways"]).0, 2);
    }

    #[test]
    fn config_precedence() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("c.conf");
        std::fs::write(&p, "# comment\nthreshold = paper\nvariant = poisson-corrected  # trailing\n").unwrap();
        let flags = Flags { config: Some(p.clone()), variant: Some("plain".into()), ..Flags::default() };
        let s = resolve(&flags).ok().unwrap();
        assert_eq!(s.variant, BandVariant::Plain);
        assert_eq!(s.threshold, ThresholdChoice::Paper);
        assert_eq!(s.tol, 1e-9);
        std::fs::write(&p, "colour = blue\n").unwrap();
        assert!(matches!(resolve(&Flags { config: Some(p), ..Flags::default() }), Err(Failure::Usage(_))));
    }

    #[test]
    fn inf_reports() {
        let (code, out, _) = call(&["inf", "lognormal", "--param", "sigma", "--lo", "0.005", "--hi", "4"]);
        assert_eq!(code, 0);
        assert!(out.contains("attained=false"), "{out}");
        assert!(out.contains("inf = 0.68"), "{out}");
    }
}
