use std::path::Path;
use std::process::{Command, Output};

fn nao(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nao-ssm")).args(args).output().expect("binary runs")
}

fn simulated(dir: &Path, days: &str, seed: &str) -> String {
    let out = dir.join("sim");
    let o = nao(&["simulate", "--days", days, "--seed", seed, "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    out.join("simulated.csv").to_str().unwrap().to_string()
}

fn report_value(text: &str, key: &str) -> f64 {
    text.lines()
        .find_map(|l| l.strip_prefix(key).and_then(|r| r.trim().strip_prefix('=')))
        .unwrap_or_else(|| panic!("{key} missing"))
        .trim()
        .parse()
        .unwrap()
}

#[test]
fn explore_writes_its_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let data = simulated(dir.path(), "1096", "4");
    let out = dir.path().join("ex");
    let o = nao(&["explore", "--data", &data, "--out", out.to_str().unwrap(), "--max-lag", "20"]);
    assert!(o.status.success());
    for f in ["periodogram.csv", "acf.csv", "pacf.csv", "doy_variance.csv", "explore.svg"] {
        assert!(out.join(f).is_file(), "{f}");
    }
    let acf = std::fs::read_to_string(out.join("acf.csv")).unwrap();
    assert_eq!(acf.lines().count(), 22);
    assert!(acf.lines().nth(1).unwrap().starts_with("0,1"));
}

#[test]
fn missing_input_is_a_data_error_naming_the_file() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("absent.csv");
    let o = nao(&["explore", "--data", missing.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(nao_ssm_cli::EXIT_DATA));
    assert!(String::from_utf8_lossy(&o.stderr).contains("absent.csv"));
}

#[test]
fn usage_errors_exit_with_code_two() {
    let dir = tempfile::tempdir().unwrap();
    let data = simulated(dir.path(), "800", "1");
    let out = dir.path().to_str().unwrap();
    for args in [
        vec!["analyze", "--data", data.as_str(), "--out", out],
        vec!["explore", "--out", out],
        vec!["explore", "--data", data.as_str(), "--out", out, "--members", "0"],
        vec!["select", "--data", data.as_str(), "--out", out, "--kinds", "sideways"],
        vec!["frobnicate"],
    ] {
        assert_eq!(nao(&args).status.code(), Some(nao_ssm_cli::EXIT_USAGE), "{args:?}");
    }
}

#[test]
fn fit_report_is_self_consistent() {
    let dir = tempfile::tempdir().unwrap();
    let data = simulated(dir.path(), "1461", "2");
    let out = dir.path().join("fit");
    let o = nao(&["fit", "--data", &data, "--out", out.to_str().unwrap()]);
    assert!(matches!(o.status.code(), Some(0) | Some(5)), "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(out.join("fit_report.txt")).unwrap();
    let (ll, k, n, bic) =
        (report_value(&text, "log_likelihood"), report_value(&text, "k"), report_value(&text, "n"), report_value(&text, "bic"));
    assert_eq!((k, n), (9.0, 1461.0));
    assert!((bic - (k * n.ln() - 2.0 * ll)).abs() < 1e-9 * bic.abs());
    let cfg = nao_ssm::model::ModelConfig::read(out.join("fitted.cfg")).unwrap();
    assert!(cfg.params.validate().is_ok());
}

#[test]
fn simulation_depends_only_on_the_seed() {
    let dir = tempfile::tempdir().unwrap();
    let a = std::fs::read(simulated(&dir.path().join("a"), "400", "9")).unwrap();
    let b = std::fs::read(simulated(&dir.path().join("b"), "400", "9")).unwrap();
    let c = std::fs::read(simulated(&dir.path().join("c"), "400", "10")).unwrap();
    assert_eq!(a, b);
    assert_ne!(a, c);
}
