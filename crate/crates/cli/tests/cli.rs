use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_fermi-gibbs"));
    cmd.env_remove("FERMI_GIBBS_DENSE_CAP");
    cmd
}

fn two_term() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data/two_term.json")
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn summary(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| {
        panic!("stdout is not JSON ({e}): {}", String::from_utf8_lossy(&out.stdout))
    })
}

#[test]
fn info_reports_locality_and_thresholds() {
    let out = run(&["info", two_term().to_str().unwrap()]);
    assert!(out.status.success());
    let v = summary(&out);
    assert_eq!(v["locality"], 4);
    assert_eq!(v["degree"], 2);
    assert!((v["beta_structural"].as_f64().unwrap() - 1.0 / 384.0).abs() < 1e-15);
    assert!((v["beta_sampling"].as_f64().unwrap() - 1.0 / 800.0).abs() < 1e-15);
}

#[test]
fn sample_above_threshold_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let out_path = dir.path().join("s.jsonl");
    let out = run(&[
        "sample", "--hamiltonian", two_term().to_str().unwrap(), "--beta", "0.01", "--samples", "10",
        "--seed", "1", "--out", out_path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("0.00125"), "stderr should cite the bound: {err}");
    assert!(!out_path.exists());
}

#[test]
fn invalid_hamiltonian_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, r#"{"n_modes": 2, "terms": [{"indices": [2, 1], "coeff": 0.5}]}"#).unwrap();
    assert_eq!(run(&["info", bad.to_str().unwrap()]).status.code(), Some(2));
}

#[test]
fn verify_passes() {
    let out = run(&["verify"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    assert_eq!(summary(&out)["passed"], true);
}

#[test]
fn sample_is_reproducible_across_workers() {
    let dir = tempfile::tempdir().unwrap();
    let mut files = Vec::new();
    for workers in ["1", "3"] {
        let p = dir.path().join(format!("s{workers}.jsonl"));
        let out = run(&[
            "sample", "--hamiltonian", two_term().to_str().unwrap(), "--beta", "0.001", "--samples", "50",
            "--seed", "9", "--workers", workers, "--out", p.to_str().unwrap(),
        ]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        files.push(std::fs::read(&p).unwrap());
    }
    assert_eq!(files[0], files[1]);
    let text = String::from_utf8(files.remove(0)).unwrap();
    let mut lines = text.lines();
    let header: Value = serde_json::from_str(lines.next().unwrap()).unwrap();
    assert_eq!(header["kind"], "header");
    assert_eq!(header["config_digest"].as_str().unwrap().len(), 64);
    assert_eq!(lines.count(), 50);
}

#[test]
fn estimate_writes_csv_with_digest() {
    let dir = tempfile::tempdir().unwrap();
    let obs = dir.path().join("obs.json");
    std::fs::write(&obs, r#"["+1 g1 g2 g3 g4", "+i g3 g4"]"#).unwrap();
    let csv = dir.path().join("est.csv");
    let out = run(&[
        "estimate", "--hamiltonian", two_term().to_str().unwrap(), "--beta", "0.001", "--samples", "200",
        "--seed", "3", "--observables", obs.to_str().unwrap(), "--out", csv.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(&csv).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert!(lines[0].starts_with("# config_digest="));
    assert_eq!(lines[1], "observable,mean,stderr");
    assert_eq!(lines.len(), 4);
}

#[test]
fn expand_lists_terms() {
    let out = run(&["expand", "--hamiltonian", two_term().to_str().unwrap(), "--beta", "0.002", "--remove", "1"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v = summary(&out);
    let terms = v["terms"].as_array().unwrap();
    assert_eq!(terms[0]["degree"], 0);
    assert!(terms.iter().any(|t| t["degree"] == 2));
}

#[test]
fn fuzz_runs_clean() {
    let out = run(&["fuzz", "--trajectories", "50", "--hamiltonians", "3", "--n-modes", "3"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
}

#[test]
fn syk_report_csv() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("syk.csv");
    let out = run(&[
        "syk", "--n", "4", "--q", "4", "--seed", "1", "--beta-max", "0.5", "--grid", "5", "--restarts", "2",
        "--iterations", "50", "--out", csv.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(&csv).unwrap();
    let rows: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(rows[0], "beta,gibbs_energy,gaussian_ceiling_lb,lower_bound_Dbeta_half,certificate");
    assert_eq!(rows.len(), 6);
}

#[test]
fn dense_cap_is_enforced() {
    let out = run(&["--dense-cap", "2", "syk", "--n", "4", "--q", "4", "--seed", "1", "--beta-max", "0.5", "--out", "/dev/null"]);
    assert_eq!(out.status.code(), Some(2));
}
