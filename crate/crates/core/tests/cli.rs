use proptest::prelude::*;
use sigband::report::{verify_all, Report, VerifyConfig};
use std::process::Command;

fn sigband(args: &[&str]) -> (i32, String, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_sigband")).args(args).output().expect("spawn sigband");
    (
        out.status.code().unwrap_or(-1),
        String::from_utf8_lossy(&out.stdout).into_owned(),
        String::from_utf8_lossy(&out.stderr).into_owned(),
    )
}

#[test]
fn check_prints_coverage() {
    let (code, out, _) = sigband(&["check", "laplace:mu=0,b=1"]);
    assert_eq!(code, 0);
    assert!(out.contains("0.7568833"), "{out}");
    let (code, out, _) = sigband(&["check", "poisson:lambda=3", "--variant", "plain"]);
    assert_eq!(code, 0);
    assert!(out.contains("0.616115"), "{out}");
    let (code, out, _) = sigband(&["check", "Gumbel:mu=0,beta=1", "--threshold", "paper"]);
    assert_eq!(code, 0);
    assert!(out.contains("0.7237513") && out.contains("0.6827"), "{out}");
}

#[test]
fn check_rejects_bad_input() {
    let (code, _, err) = sigband(&["check", "pareto:xm=1,alpha=1.5"]);
    assert_eq!(code, 2);
    assert!(err.contains("alpha must exceed 2"), "{err}");
    for args in [
        vec!["check", "poisson:lambda=3,mu=1"],
        vec!["check", "poisson:lambda=abc"],
        vec!["check", ""],
        vec!["check", "gamma:alpha=2", "--tol", "-1"],
        vec!["check", "gamma:alpha=2", "--threshold", "rounded"],
        vec!["bogus"],
        vec![],
    ] {
        assert_eq!(sigband(&args).0, 2, "{args:?}");
    }
    assert_eq!(sigband(&["--help"]).0, 0);
}

#[test]
fn fig_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("fig1.csv");
    let svg = dir.path().join("fig1.svg");
    let (code, _, err) = sigband(&["fig", "1", "--csv", csv.to_str().unwrap(), "--svg", svg.to_str().unwrap()]);
    assert_eq!(code, 0, "{err}");
    let text = std::fs::read_to_string(&csv).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "param,coverage,excess");
    assert_eq!(lines.len(), 401);
    let first: f64 = lines[1].split(',').next().unwrap().parse().unwrap();
    let last: f64 = lines[400].split(',').next().unwrap().parse().unwrap();
    assert_eq!((first, last), (1.0, 20.0));
    assert!(std::fs::read_to_string(&svg).unwrap().contains("<polyline"));

    let (code, out, _) = sigband(&["fig", "9"]);
    assert_eq!(code, 0);
    let rows: Vec<&str> = out.lines().skip(1).collect();
    assert_eq!(rows.len(), 1000);
    for r in rows {
        let excess: f64 = r.split(',').nth(2).unwrap().parse().unwrap();
        assert!(excess > 0.0, "{r}");
    }
    assert_eq!(sigband(&["fig", "10"]).0, 2);
}

#[test]
fn sweep_inf_mc() {
    let (code, out, _) = sigband(&["sweep", "weibull:lambda=1", "--param", "k", "--lo", "1", "--hi", "10", "--points", "10"]);
    assert_eq!(code, 0);
    assert_eq!(out.lines().count(), 11);
    let (code, out, _) = sigband(&["sweep", "gamma", "--param", "alpha", "--lo", "0.1", "--hi", "100", "--points", "5", "--log"]);
    assert_eq!(code, 0, "{out}");
    assert_eq!(sigband(&["sweep", "gamma", "--param", "zeta", "--lo", "1", "--hi", "2"]).0, 2);
    assert_eq!(sigband(&["sweep", "gamma", "--param", "alpha", "--lo", "2", "--hi", "1"]).0, 2);

    let (code, out, _) = sigband(&["inf", "lognormal", "--param", "sigma", "--lo", "0.005", "--hi", "4"]);
    assert_eq!(code, 0);
    assert!(out.contains("attained=false"), "{out}");
    let inf: f64 = out.split("inf = ").nth(1).unwrap().split_whitespace().next().unwrap().parse().unwrap();
    assert!((inf - 0.6826895).abs() < 2e-3);

    let (code, a, _) = sigband(&["mc", "compound_poisson_uniform:n=100", "--samples", "200000", "--seed", "7"]);
    assert_eq!(code, 0);
    assert!(a.contains("below"), "{a}");
    let (_, b, _) = sigband(&["mc", "compound_poisson_uniform:n=100", "--samples", "200000", "--seed", "7"]);
    assert_eq!(a, b);
    assert_eq!(sigband(&["mc", "gamma:alpha=2"]).0, 2);
}

#[test]
fn config_file_and_precedence() {
    let dir = tempfile::tempdir().unwrap();
    let conf = dir.path().join("sigband.conf");
    std::fs::write(&conf, "# defaults\nvariant = poisson-corrected\nthreshold = paper\n").unwrap();
    let c = conf.to_str().unwrap();
    let (code, out, _) = sigband(&["check", "poisson:lambda=3", "--config", c]);
    assert_eq!(code, 0);
    assert!(out.contains("poisson-corrected") && out.contains("0.8662950"), "{out}");
    let (_, out, _) = sigband(&["check", "poisson:lambda=3", "--config", c, "--variant", "plain"]);
    assert!(out.contains("0.6161150"), "{out}");
    std::fs::write(&conf, "speed = fast\n").unwrap();
    assert_eq!(sigband(&["check", "poisson:lambda=3", "--config", c]).0, 2);
    assert_eq!(sigband(&["check", "poisson:lambda=3", "--config", "/nonexistent/x.conf"]).0, 2);
}

#[test]
fn verify_all_report_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    let (code, out, _) = sigband(&["verify-all", "--samples", "100000", "--out", a.to_str().unwrap()]);
    assert_eq!(code, 0, "{out}");
    assert_eq!(sigband(&["verify-all", "--samples", "100000", "--out", b.to_str().unwrap()]).0, 0);
    let (ta, tb) = (std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    assert_eq!(ta, tb);
    let report = Report::from_json(std::str::from_utf8(&ta).unwrap()).unwrap();
    assert!(report.all_pass());
    assert_eq!(report.to_json().unwrap().as_bytes(), &ta[..]);
    assert_eq!(sigband(&["verify-all", "--out", "/nonexistent/dir/r.json", "--samples", "10000"]).0, 2);
}

#[test]
fn verify_all_records() {
    let report = verify_all(&VerifyConfig::default());
    assert_eq!(report.summary.failed, 0);
    assert_eq!(report.summary.total, report.records.len());
    let gumbel = report
        .records
        .iter()
        .find(|r| r.family == "gumbel" && r.kind == "reference_value")
        .unwrap();
    assert!((gumbel.coverage_closed - 0.723751).abs() < 5e-7 && gumbel.pass);
    let weibull = report
        .records
        .iter()
        .find(|r| r.family == "weibull" && r.params.get("k") == Some(&3.0))
        .unwrap();
    assert!(!weibull.exceeds_threshold && !weibull.expected_exceeds && weibull.pass);
    let mc = report.records.iter().find(|r| r.family == "compound_poisson_uniform").unwrap();
    assert_eq!(mc.params.get("n"), Some(&100.0));
    assert!(mc.pass && !mc.exceeds_threshold);
    for r in &report.records {
        assert_eq!(r.pass, r.abs_diff <= r.tolerance && r.exceeds_threshold == r.expected_exceeds, "{r:?}");
    }
    let back = Report::from_json(&report.to_json().unwrap()).unwrap();
    assert_eq!(back, report);
}

#[test]
fn tight_tolerance_surfaces_failures() {
    let cfg = VerifyConfig { tol: 1e-17, samples: 10_000, ..VerifyConfig::default() };
    let report = verify_all(&cfg);
    let failing: Vec<_> = report.records.iter().filter(|r| !r.pass).collect();
    assert!(!failing.is_empty());
    assert!(failing.iter().all(|r| r.kind == "closed_vs_quadrature"));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn cli_never_panics_on_arbitrary_specs(s in "[a-z_]{0,12}(:[a-z]{1,6}=[-0-9.e]{0,6}(,[a-z]{1,6}=[-0-9.e]{0,6}){0,2})?") {
        let mut out = Vec::new();
        let mut err = Vec::new();
        let code = sigband::cli::run_with(["sigband", "check", s.as_str(), "--samples", "10000"], &mut out, &mut err);
        prop_assert!(code == 0 || code == 1 || code == 2);
        if code == 2 {
            prop_assert!(!err.is_empty());
        }
    }

    #[test]
    fn csv_round_trips_values(lo in 2.1f64..50.0, width in 0.5f64..100.0, n in 2usize..30) {
        let grid = sigband::sweep::linspace(lo, lo + width, n);
        let table = sigband::sweep::sweep_family(
            sigband::Family::Pareto, "alpha", &grid, &Default::default(), sigband::BandVariant::Plain,
        ).unwrap();
        let csv = sigband::report::table_to_csv(&table);
        for (line, row) in csv.lines().skip(1).zip(&table.rows) {
            let v: Vec<f64> = line.split(',').map(|x| x.parse().unwrap()).collect();
            prop_assert_eq!(v[0], row.param);
            prop_assert_eq!(v[1], row.coverage);
            prop_assert_eq!(v[2], row.excess);
        }
    }
}
