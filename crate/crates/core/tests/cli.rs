//! End-to-end runs of the binary.

mod common;

use std::path::{Path, PathBuf};
use std::process::Command;

use common::{num, read_csv, read_key_values};

const BIN: &str = env!("CARGO_BIN_EXE_nlap-galerkin");

const SMALL: &str = r#"
seed = 1
[problem]
n = 2
p = 4.0
q = 1.5
alpha = 1.0
a1 = 1.0
lambda_fraction = 0.01
[weight]
kind = "exponential"
rate = 1.0
[mesh]
radius = 6.0
elements = 400
[constants]
samples = 40
"#;

fn write_config(dir: &Path, text: &str) -> PathBuf {
    let p = dir.join("run.toml");
    std::fs::write(&p, text).unwrap();
    p
}

fn run(cmd: &str, config: &Path, out: &Path, extra: &[&str]) -> i32 {
    let status = Command::new(BIN)
        .arg(cmd)
        .arg("--config")
        .arg(config)
        .arg("--out")
        .arg(out)
        .args(extra)
        .output()
        .expect("binary runs");
    status.status.code().expect("exit code")
}

#[test]
fn baseline_solve_writes_consistent_artifacts() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("o");
    assert_eq!(run("solve", &common::baseline_config_path(), &out, &[]), 0);
    for f in ["report.csv", "solution.csv", "schedule.csv", "ledger.txt"] {
        assert!(out.join(f).exists(), "{f} missing");
    }
    let (_, rows) = read_csv(&out.join("report.csv"));
    let r = &rows[0];
    assert!(num(r, "positivity_min") > 0.0);
    assert!(num(r, "residual") <= 1e-8);
    let kv = read_key_values(&out.join("ledger.txt"));
    let g = |k: &str| kv[k].parse::<f64>().unwrap();
    let w1n = num(r, "w1n");
    let sb = g("sup_constant") * (g("C_star") * w1n).max(1.0);
    assert!((num(r, "sup_bound") - sb).abs() <= 1e-12 * sb);
    assert_eq!(r["within_bound"] == "true", w1n <= num(r, "rho_tilde"));
    assert_eq!(r["sup_bound_ok"] == "true", num(r, "sup") <= sb);
}

#[test]
fn q_at_least_n_is_rejected_at_load() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), &SMALL.replace("q = 1.5", "q = 2.0"));
    let out = tmp.path().join("o");
    assert_eq!(run("solve", &cfg, &out, &[]), 2);
    let rec = read_key_values(&out.join("error_record.txt"));
    assert_eq!(rec["kind"], "config");
    assert!(rec["message"].contains("1<q<N"));
}

#[test]
fn unknown_keys_and_bad_flags_are_config_errors() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), &SMALL.replace("rate = 1.0", "rate = 1.0\nshape = 2"));
    assert_eq!(run("solve", &cfg, &tmp.path().join("a"), &[]), 2);
    let cfg = write_config(tmp.path(), SMALL);
    assert_eq!(run("eigen", &cfg, &tmp.path().join("b"), &["--tol", "-1"]), 2);
}

#[test]
fn lambda_above_window_fails_the_certificate() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), &SMALL.replace("lambda_fraction = 0.01", "lambda_fraction = 2.0"));
    let out = tmp.path().join("o");
    assert_eq!(run("solve", &cfg, &out, &[]), 3);
    let rec = read_key_values(&out.join("error_record.txt"));
    assert_eq!(rec["kind"], "certificate_failed");
    assert_eq!(rec["exit_code"], "3");
    assert!(rec.contains_key("threshold"));
}

#[test]
fn single_lambda_sweep_matches_solve() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), &format!("{SMALL}\n[sweep]\nlambda_fractions = [0.01]\n"));
    let (a, b) = (tmp.path().join("solve"), tmp.path().join("sweep"));
    assert_eq!(run("solve", &cfg, &a, &[]), 0);
    assert_eq!(run("sweep-lambda", &cfg, &b, &[]), 0);
    let (_, s) = read_csv(&a.join("report.csv"));
    let (_, w) = read_csv(&b.join("sweep.csv"));
    assert_eq!(w.len(), 1);
    for k in ["lambda", "w1n", "sup", "residual", "positivity_min"] {
        assert_eq!(s[0][k], w[0][k], "{k}");
    }
}

#[test]
fn sweep_columns_are_recomputable() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), &format!("{SMALL}\n[sweep]\nlambda_fractions = [0.4, 0.1, 0.02]\n"));
    let out = tmp.path().join("o");
    assert_eq!(run("sweep-lambda", &cfg, &out, &[]), 0);
    let (_, rows) = read_csv(&out.join("sweep.csv"));
    let kv = read_key_values(&out.join("ledger.txt"));
    let g = |k: &str| kv[k].parse::<f64>().unwrap();
    let theta = g("Theta");
    let c_tilde = num(&rows[0], "sup") / num(&rows[0], "w1n").powf(theta);
    for r in &rows {
        assert_eq!(r["status"], "ok");
        let l = num(r, "lambda");
        assert!((l / g("lambda_star") - num(r, "lambda_fraction")).abs() < 1e-12);
        let nb = (2.0 * l * g("K1")).powf(2.0);
        assert!((num(r, "norm_bound") - nb).abs() <= 1e-12 * nb);
        assert_eq!(r["norm_ok"] == "true", num(r, "w1n") <= nb + 1e-6);
        let env = c_tilde * num(r, "w1n").powf(theta);
        assert!((num(r, "sup_envelope") - env).abs() <= 1e-12 * env);
        let sb = g("sup_constant") * (g("C_star") * num(r, "w1n")).max(1.0);
        assert!((num(r, "sup_bound") - sb).abs() <= 1e-12 * sb);
    }
    let w: Vec<f64> = rows.iter().map(|r| num(r, "w1n")).collect();
    assert!(w.windows(2).all(|p| p[1] < p[0]));
}

#[test]
fn threshold_grid_certifies_and_stays_certified() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), SMALL);
    let out = tmp.path().join("o");
    assert_eq!(run("threshold", &cfg, &out, &[]), 0);
    let (_, rows) = read_csv(&out.join("threshold.csv"));
    assert_eq!(rows.len(), 30);
    let cert: Vec<bool> = rows.iter().map(|r| r["certified"] == "true").collect();
    let first = cert.iter().position(|c| *c).expect("some lambda certified");
    assert!(cert[first..].iter().all(|c| *c));
    let c: Vec<f64> = rows.iter().map(|r| num(r, "C_Lambda")).collect();
    assert!(c.windows(2).all(|p| p[1] > p[0]));
    let kv = read_key_values(&out.join("threshold_summary.txt"));
    assert_eq!(kv["first_certified_lambda"], rows[first]["lambda"]);

    let one = write_config(tmp.path(), &format!("{SMALL}\n[threshold]\nlambda_min = 0.01\nlambda_max = 0.01\npoints = 1\n"));
    let out = tmp.path().join("one");
    assert_eq!(run("threshold", &one, &out, &[]), 0);
    assert_eq!(read_key_values(&out.join("threshold_summary.txt"))["first_certified_lambda"], "none");
}

#[test]
fn threshold_needs_canonical_kind() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        &SMALL.replace("lambda_fraction = 0.01", "lambda_fraction = 0.01\nnonlinearity = \"sine-modulated\""),
    );
    assert_eq!(run("threshold", &cfg, &tmp.path().join("o"), &[]), 2);
}

#[test]
fn exhaustion_without_forcing_is_identically_zero() {
    let tmp = tempfile::tempdir().unwrap();
    let text = SMALL
        .replace("lambda_fraction = 0.01", "lambda = 0.0\nnonlinearity = \"zero\"")
        .replace("elements = 400", "elements = 400\nradii = [2.0, 4.0, 6.0]");
    let cfg = write_config(tmp.path(), &text);
    let out = tmp.path().join("o");
    assert_eq!(run("exhaust", &cfg, &out, &[]), 0);
    let (_, balls) = read_csv(&out.join("exhaust.csv"));
    assert_eq!(balls.len(), 3);
    for b in &balls {
        assert_eq!(num(b, "w1n"), 0.0);
        assert_eq!(num(b, "sup"), 0.0);
    }
    let (_, ann) = read_csv(&out.join("annulus.csv"));
    assert!(ann.iter().all(|r| num(r, "annulus_sup") == 0.0));
}

#[test]
fn exhaust_requires_radii() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), SMALL);
    assert_eq!(run("exhaust", &cfg, &tmp.path().join("o"), &[]), 2);
}

#[test]
fn check_fk_reports_no_envelope_violations() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), &format!("{SMALL}\n[check_fk]\nk_max = 20\n"));
    let out = tmp.path().join("o");
    assert_eq!(run("check-fk", &cfg, &out, &[]), 0);
    let kv = read_key_values(&out.join("check_fk_summary.txt"));
    assert_eq!(kv["envelope_violations"], "0");
    assert_eq!(kv["growth_violations"], "0");
    let (_, rows) = read_csv(&out.join("fk_uniform.csv"));
    let errs: Vec<f64> = rows.iter().map(|r| num(r, "max_abs_err")).collect();
    // convergence is asymptotic; from k = 10 on the error shrinks
    assert!(errs[1..].windows(2).all(|w| w[1] < w[0]), "{errs:?}");
}

#[test]
fn eigen_on_unit_disc() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), &SMALL.replace("radius = 6.0", "radius = 1.0"));
    let out = tmp.path().join("o");
    assert_eq!(run("eigen", &cfg, &out, &["--seed", "9"]), 0);
    let (_, rows) = read_csv(&out.join("eigen.csv"));
    assert!((num(&rows[0], "sigma1") - 5.7832).abs() < 0.01);
}

#[test]
fn same_seed_gives_identical_files() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), SMALL);
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    assert_eq!(run("solve", &cfg, &a, &["--seed", "5"]), 0);
    assert_eq!(run("solve", &cfg, &b, &["--seed", "5"]), 0);
    for f in ["report.csv", "solution.csv", "schedule.csv", "ledger.txt"] {
        assert_eq!(std::fs::read(a.join(f)).unwrap(), std::fs::read(b.join(f)).unwrap(), "{f}");
    }
}
