//! End-to-end runs of the `qtomo` binary.

use serde_json::Value;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use tempfile::TempDir;

fn qtomo(args: &[&str]) -> Output {
    qtomo_env(args, &[])
}

fn qtomo_env(args: &[&str], env: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_qtomo"));
    cmd.args(args).env_remove("QTOMO_THREADS");
    for (k, v) in env {
        cmd.env(k, v);
    }
    cmd.output().expect("binary runs")
}

fn ok(args: &[&str]) -> Output {
    let out = qtomo(args);
    assert!(out.status.success(), "{args:?} failed: {}", String::from_utf8_lossy(&out.stderr));
    out
}

fn json_stdout(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn path(dir: &TempDir, name: &str) -> PathBuf {
    dir.path().join(name)
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// `(re, im, std_error)` of `--observable` output.
fn estimate(v: &Value) -> (f64, f64, f64) {
    (v["mean"][0].as_f64().unwrap(), v["mean"][1].as_f64().unwrap(), v["std_error"].as_f64().unwrap())
}

/// Kolmogorov-Smirnov p-value against U(0, 1), asymptotic distribution.
fn ks_uniform_p(mut u: Vec<f64>) -> f64 {
    u.sort_by(f64::total_cmp);
    let n = u.len() as f64;
    let d = u
        .iter()
        .enumerate()
        .map(|(i, &x)| (x - i as f64 / n).max((i + 1) as f64 / n - x))
        .fold(0.0, f64::max);
    let lambda = (n.sqrt() + 0.12 + 0.11 / n.sqrt()) * d;
    let sum: f64 = (1..=100).map(|k| (-1f64).powi(k - 1) * (-2.0 * (k * k) as f64 * lambda * lambda).exp()).sum();
    (2.0 * sum).clamp(0.0, 1.0)
}

fn csv_column(p: &Path, col: usize) -> Vec<f64> {
    let text = std::fs::read_to_string(p).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("quorum,s1,s2,s3,o1"));
    lines.map(|l| l.split(',').nth(col).unwrap().parse().unwrap()).collect()
}

#[test]
fn coherent_state_file_and_summary() {
    let dir = TempDir::new().unwrap();
    let f = path(&dir, "coh.json");
    let out = ok(&["state", "--kind", "coherent", "--param", "0.5", "--dim", "16", "-o", s(&f)]);
    let summary = json_stdout(&out);
    // e^{-|b|^2} |b|^{2n} / n! renormalized over the 16 kept levels
    let mut weights = vec![1.0f64];
    for n in 1..16 {
        let prev = weights[n - 1];
        weights.push(prev * 0.25 / n as f64);
    }
    let rho00 = 1.0 / weights.iter().sum::<f64>();
    assert!((summary["rho_00"].as_f64().unwrap() - rho00).abs() < 1e-12);
    assert!((rho00 - (-0.25f64).exp()).abs() < 1e-12);
    assert!((summary["trace"].as_f64().unwrap() - 1.0).abs() < 1e-12);
    assert_eq!(summary["version"], 1);
    let file: Value = serde_json::from_str(&std::fs::read_to_string(&f).unwrap()).unwrap();
    assert_eq!(file["version"], 1);
    assert_eq!(file["dim"], 16);
    assert_eq!(file["entries"].as_array().unwrap().len(), 256);
    assert!((file["purity"].as_f64().unwrap() - 1.0).abs() < 1e-12);
}

#[test]
fn fock_state_is_a_diagonal_projector() {
    let v = json_stdout(&ok(&["state", "--kind", "fock", "--param", "2", "--dim", "8"]));
    let entries = v["entries"].as_array().unwrap();
    for (i, e) in entries.iter().enumerate() {
        let want = if i == 2 * 8 + 2 { 1.0 } else { 0.0 };
        assert_eq!(e[0].as_f64().unwrap(), want);
        assert_eq!(e[1].as_f64().unwrap(), 0.0);
    }
}

#[test]
fn truncation_violation_exits_3_with_json_error() {
    let out = qtomo(&["state", "--kind", "coherent", "--param", "4", "--dim", "8"]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("truncation"));
    let out = qtomo(&["--json-errors", "state", "--kind", "coherent", "--param", "4", "--dim", "8"]);
    assert_eq!(out.status.code(), Some(3));
    let err: Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(err["version"], 1);
    assert_eq!(err["error"]["code"], 3);
    assert_eq!(err["error"]["kind"], "truncation");
}

#[test]
fn usage_errors_exit_2() {
    assert_eq!(qtomo(&["state", "--kind", "fock"]).status.code(), Some(2));
    assert_eq!(qtomo(&["sample", "--method", "spin"]).status.code(), Some(2));
    assert_eq!(qtomo(&["frobnicate"]).status.code(), Some(2));
    let out = qtomo(&["--json-errors", "reconstruct", "--method", "homodyne"]);
    assert_eq!(out.status.code(), Some(2));
    let err: Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(err["error"]["kind"], "usage");
    let out = qtomo(&["--json-errors", "sample", "--bogus"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(serde_json::from_slice::<Value>(&out.stderr).is_ok());
    assert_eq!(qtomo_env(&["state", "--kind", "fock", "--param", "0", "--dim", "2"], &[("QTOMO_THREADS", "0")]).status.code(), Some(2));
}

#[test]
fn sampling_is_deterministic() {
    let dir = TempDir::new().unwrap();
    let (a, b) = (path(&dir, "a.csv"), path(&dir, "b.csv"));
    let summary = json_stdout(&ok(&["sample", "--method", "spin", "--s", "0.5", "--shots", "1000", "--seed", "42", "-o", s(&a)]));
    assert_eq!(summary["shots"], 1000);
    assert_eq!(summary["method"], "spin");
    qtomo_env(&["sample", "--method", "spin", "--s", "0.5", "--shots", "1000", "--seed", "42", "-o", s(&b)], &[("QTOMO_THREADS", "1")]);
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    // stdout mode carries the same bytes
    let out = ok(&["sample", "--method", "spin", "--s", "0.5", "--shots", "1000", "--seed", "42"]);
    assert_eq!(out.stdout, std::fs::read(&a).unwrap());
    let text = std::fs::read_to_string(&a).unwrap();
    let row = text.lines().nth(1).unwrap();
    // 17 significant digits per number
    for field in row.split(',').skip(1) {
        let mantissa = field.split('e').next().unwrap().trim_start_matches('-');
        assert_eq!(mantissa.chars().filter(char::is_ascii_digit).count(), 17, "{field}");
    }
}

#[test]
fn zero_shots_is_an_error() {
    let out = qtomo(&["sample", "--method", "homodyne", "--kind", "fock", "--param", "0", "--dim", "4", "--shots", "0", "--seed", "1"]);
    assert!(!out.status.success());
}

#[test]
fn kerr_phases_of_a_fock_state_are_uniform() {
    let dir = TempDir::new().unwrap();
    let state = path(&dir, "fock1.json");
    let rec = path(&dir, "kerr.csv");
    ok(&["state", "--kind", "fock", "--param", "1", "--dim", "4", "-o", s(&state)]);
    ok(&["sample", "--method", "kerr", "--state", s(&state), "--shots", "10000", "--seed", "1", "-o", s(&rec)]);
    let phi = csv_column(&rec, 4);
    assert_eq!(phi.len(), 10000);
    let u: Vec<f64> = phi.iter().map(|p| p / (2.0 * std::f64::consts::PI)).collect();
    assert!(u.iter().all(|x| (0.0..1.0).contains(x)));
    let p = ks_uniform_p(u);
    assert!(p > 0.001, "KS p = {p}");
}

#[test]
fn spin_half_pipeline_recovers_sigma_z() {
    let dir = TempDir::new().unwrap();
    let rec = path(&dir, "up.csv");
    ok(&["sample", "--method", "spin", "--s", "0.5", "--shots", "100000", "--seed", "7", "-o", s(&rec)]);
    let v = json_stdout(&ok(&["reconstruct", "--method", "spin", "--s", "0.5", "--records", s(&rec), "--observable", "sigma_z"]));
    let (re, im, se) = estimate(&v);
    assert_eq!(v["n_samples"], 100000);
    assert!(((re - 1.0).powi(2) + im * im).sqrt() <= 5.0 * se, "{re} +- {se}");
}

#[test]
fn identity_is_one_for_every_method() {
    let dir = TempDir::new().unwrap();
    let coh = path(&dir, "coh.json");
    ok(&["state", "--kind", "coherent", "--param", "0.3", "--param-im", "0.2", "--dim", "8", "-o", s(&coh)]);
    let cases: [(&str, Vec<&str>, Vec<&str>); 6] = [
        ("homodyne", vec!["--state", s(&coh)], vec!["--dim", "8"]),
        ("squeezed_homodyne", vec!["--state", s(&coh), "--zeta", "0.2"], vec!["--dim", "8"]),
        ("parity", vec!["--state", s(&coh)], vec!["--dim", "8"]),
        ("spin", vec!["--s", "1", "--direction", "0.6,0,0.8"], vec!["--s", "1"]),
        ("pauli", vec!["--s", "0.5", "--direction", "0,1,0"], vec![]),
        ("kerr", vec!["--state", s(&coh)], vec!["--dim", "8"]),
    ];
    for (method, sample_args, recon_args) in cases {
        let rec = path(&dir, &format!("{method}.csv"));
        let mut args = vec!["sample", "--method", method, "--shots", "20000", "--seed", "5", "-o", s(&rec)];
        args.extend(sample_args);
        ok(&args);
        let mut args = vec!["reconstruct", "--method", method, "--records", s(&rec), "--observable", "identity"];
        args.extend(recon_args);
        let v = json_stdout(&ok(&args));
        let (re, im, se) = estimate(&v);
        assert!(((re - 1.0).powi(2) + im * im).sqrt() <= 5.0 * se + 1e-12, "{method}: {re} {im} +- {se}");
        assert_eq!(v["method"], method);
    }
    let v = json_stdout(&ok(&["reconstruct", "--method", "nonunitary", "--state", s(&coh), "--observable", "identity"]));
    let (re, im, _) = estimate(&v);
    assert!((re - 1.0).abs() < 1e-10 && im.abs() < 1e-10);
}

#[test]
fn mismatched_method_and_records_fail() {
    let dir = TempDir::new().unwrap();
    let rec = path(&dir, "spin.csv");
    ok(&["sample", "--method", "spin", "--s", "0.5", "--shots", "100", "--seed", "1", "-o", s(&rec)]);
    let out = qtomo(&["reconstruct", "--method", "homodyne", "--records", s(&rec), "--dim", "4"]);
    assert!(!out.status.success());
    let out = qtomo(&["reconstruct", "--method", "pauli", "--records", s(&rec), "--observable", "sigma_z"]);
    assert!(!out.status.success());
    let out = qtomo(&["reconstruct", "--method", "spin", "--s", "0.5", "--records", s(&rec), "--observable", "momentum"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn matrix_reconstruction_json_layout() {
    let dir = TempDir::new().unwrap();
    let rec = path(&dir, "pauli.csv");
    let state = path(&dir, "spin.json");
    let out = path(&dir, "recon.json");
    ok(&["state", "--s", "0.5", "--direction", "1,0,0", "-o", s(&state)]);
    ok(&["sample", "--method", "pauli", "--state", s(&state), "--shots", "20000", "--seed", "9", "-o", s(&rec)]);
    ok(&["reconstruct", "--method", "pauli", "--records", s(&rec), "--reference", s(&state), "--nearest-physical", "-o", s(&out)]);
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(v["version"], 1);
    assert_eq!(v["dim"], 2);
    let elements = v["elements"].as_array().unwrap();
    assert_eq!(elements.len(), 4);
    for e in elements {
        for key in ["k", "n", "mean", "std_error", "n_samples"] {
            assert!(e.get(key).is_some(), "missing {key}");
        }
        let (k, n) = (e["k"].as_u64().unwrap(), e["n"].as_u64().unwrap());
        let (re, im) = (e["mean"][0].as_f64().unwrap(), e["mean"][1].as_f64().unwrap());
        // |+x><+x| has every entry 1/2
        let se = e["std_error"].as_f64().unwrap();
        assert!(((re - 0.5).powi(2) + im * im).sqrt() <= 5.0 * se, "({k},{n}) {re} {im} +- {se}");
    }
    let diag = &v["diagnostics"];
    assert_eq!(diag["method"], "pauli");
    assert!(diag["comparison"]["fidelity"].as_f64().unwrap() > 0.99);
    assert_eq!(diag["nearest_physical"].as_array().unwrap().len(), 4);
}

#[test]
fn kerr_matrix_marks_the_diagonal_not_estimated() {
    let dir = TempDir::new().unwrap();
    let rec = path(&dir, "kerr.csv");
    ok(&["sample", "--method", "kerr", "--kind", "coherent", "--param", "0.4", "--dim", "6", "--shots", "5000", "--seed", "3", "-o", s(&rec)]);
    let v = json_stdout(&ok(&["reconstruct", "--method", "kerr", "--dim", "6", "--records", s(&rec)]));
    assert_eq!(v["diagnostics"]["not_estimated"], 6);
    for e in v["elements"].as_array().unwrap() {
        assert_eq!(e["mean"].is_null(), e["k"] == e["n"]);
    }
}

#[test]
fn thread_count_does_not_change_results() {
    let dir = TempDir::new().unwrap();
    let rec = path(&dir, "h.csv");
    ok(&["sample", "--method", "homodyne", "--kind", "thermal", "--param", "0.2", "--dim", "12", "--shots", "9000", "--seed", "4", "-o", s(&rec)]);
    let args = ["reconstruct", "--method", "homodyne", "--dim", "4", "--records", s(&rec)];
    let one = qtomo_env(&args, &[("QTOMO_THREADS", "1")]);
    let four = qtomo_env(&args, &[("QTOMO_THREADS", "4")]);
    assert!(one.status.success() && four.status.success());
    assert_eq!(one.stdout, four.stdout);
}

#[test]
fn quorum_verify_reports() {
    let dir = TempDir::new().unwrap();
    let pauli = path(&dir, "pauli.json");
    ok(&["quorum", "build", "--family", "pauli", "-o", s(&pauli)]);
    let v = json_stdout(&ok(&["quorum", "verify", "--spec", s(&pauli)]));
    assert_eq!(v["verdict"], "quorum");
    assert_eq!(v["rank"], 4);
    assert_eq!(v["biorthogonality"]["pass"], true);

    let proj = path(&dir, "proj.json");
    std::fs::write(&proj, r#"{"family": "observable_projectors", "dim": 3}"#).unwrap();
    let v = json_stdout(&ok(&["quorum", "verify", "--spec", s(&proj)]));
    assert_eq!(v["verdict"], "reducible");
    assert_eq!(v["rank"], 3);
    assert_eq!(v["irreducible"], false);
    assert_eq!(v["trace_condition"]["verdict"], "holds_but_reducible");

    let bad = path(&dir, "bad.json");
    std::fs::write(&bad, r#"{"dim": 2, "elements": [{"weight": 1}]}"#).unwrap();
    assert_eq!(qtomo(&["quorum", "verify", "--spec", s(&bad)]).status.code(), Some(2));
}

/// `Tr[A^dag B]` of two operators in wire form.
fn hs(a: &Value, b: &Value) -> (f64, f64) {
    let (ea, eb) = (a["entries"].as_array().unwrap(), b["entries"].as_array().unwrap());
    ea.iter().zip(eb).fold((0.0, 0.0), |(re, im), (x, y)| {
        let (xr, xi) = (x[0].as_f64().unwrap(), -x[1].as_f64().unwrap());
        let (yr, yi) = (y[0].as_f64().unwrap(), y[1].as_f64().unwrap());
        (re + xr * yr - xi * yi, im + xr * yi + xi * yr)
    })
}

#[test]
fn weigert_spin_one_dual_is_biorthogonal() {
    let dir = TempDir::new().unwrap();
    let spec = path(&dir, "weigert.json");
    let dual = path(&dir, "dual.json");
    ok(&["quorum", "build", "--family", "weigert", "--s", "1", "--directions", "9", "-o", s(&spec)]);
    let v = json_stdout(&ok(&["quorum", "verify", "--spec", s(&spec)]));
    assert_eq!(v["verdict"], "quorum");
    assert_eq!(v["rank"], 9);
    for method in ["gram-schmidt", "pseudoinverse"] {
        ok(&["quorum", "dual", "--spec", s(&spec), "--method", method, "-o", s(&dual)]);
        let c: Value = serde_json::from_str(&std::fs::read_to_string(&spec).unwrap()).unwrap();
        let b: Value = serde_json::from_str(&std::fs::read_to_string(&dual).unwrap()).unwrap();
        assert_eq!(b["version"], 1);
        let (ce, be) = (c["elements"].as_array().unwrap(), b["elements"].as_array().unwrap());
        assert_eq!(be.len(), 9);
        for (m, bm) in be.iter().enumerate() {
            for (n, cn) in ce.iter().enumerate() {
                let (re, im) = hs(&bm["operator"], &cn["operator"]);
                let want = if m == n { 1.0 } else { 0.0 };
                assert!((re - want).abs() < 1e-9 && im.abs() < 1e-9, "{method} ({m},{n}): {re} {im}");
            }
        }
        let v = json_stdout(&ok(&["quorum", "verify", "--spec", s(&spec), "--dual", s(&dual)]));
        assert_eq!(v["verdict"], "quorum");
    }
}

#[test]
fn kernels_eval_csv() {
    let out = ok(&["kernels", "eval", "--family", "spin", "--observable", "sigma_z", "--dim", "2", "--m", "0.5", "--x", "0:3.141592653589793:3", "--y", "0"]);
    let text = String::from_utf8(out.stdout).unwrap();
    let rows: Vec<Vec<f64>> = text.lines().skip(1).map(|l| l.split(',').map(|x| x.parse().unwrap()).collect()).collect();
    assert_eq!(text.lines().next(), Some("x,y,re,im"));
    assert_eq!(rows.len(), 3);
    // 3 (2m) cos(theta) for m = 1/2
    for r in &rows {
        assert!((r[2] - 3.0 * r[0].cos()).abs() < 1e-12 && r[3].abs() < 1e-12, "{r:?}");
    }
    let out = ok(&["kernels", "eval", "--family", "kerr", "--observable", "matrix_unit(0,1)", "--dim", "3", "--x", "-1:1:5", "--y", "0:1:2"]);
    assert_eq!(String::from_utf8(out.stdout).unwrap().lines().count(), 11);
}
