use std::path::Path;
use std::process::{Command, Output};

use irs_core::scenario::preset_file;

fn irs(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_irs")).args(args).output().unwrap()
}

fn run_ok(args: &[&str]) -> Output {
    let out = irs(args);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    out
}

fn sweep_into(dir: &Path) -> Vec<u8> {
    run_ok(&[
        "sweep", "--preset", "paper-fig3", "--sweep", "rician", "--values", "0,3",
        "--schemes", "proposed,nonrobust-no-intf", "--samples", "100", "--iterations", "20",
        "--seed", "7", "--out", dir.to_str().unwrap(),
    ]);
    std::fs::read(dir.join("results.csv")).unwrap()
}

#[test]
fn sweep_writes_reproducible_artifacts() {
    let tmp = tempfile::tempdir().unwrap();
    let a = sweep_into(&tmp.path().join("a"));
    let b = sweep_into(&tmp.path().join("b"));
    assert_eq!(a, b);
    let text = String::from_utf8(a).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "scenario,scheme,parameter,value,ub_rate,mc_rate,mc_stderr,n_samples,seed,config_hash"
    );
    assert_eq!(lines.count(), 4);
    let manifest: serde_json::Value =
        serde_json::from_slice(&std::fs::read(tmp.path().join("a/manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["seed"], 7);
    assert_eq!(manifest["sweep"]["parameter"], "rician");
}

#[test]
fn solve_writes_trace() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().join("solve");
    run_ok(&["solve", "--iterations", "30", "--out", dir.to_str().unwrap()]);
    let trace = std::fs::read_to_string(dir.join("trace.csv")).unwrap();
    assert!(trace.starts_with("t,c0,gap,probe_ub_rate\n"));
    assert_eq!(trace.lines().count(), 31);
    let solution: serde_json::Value =
        serde_json::from_slice(&std::fs::read(dir.join("solution.json")).unwrap()).unwrap();
    assert_eq!(solution["phases_rad"].as_array().unwrap().len(), 64);
}

#[test]
fn solve_rejects_schemes_without_solver() {
    let tmp = tempfile::tempdir().unwrap();
    let out = irs(&["solve", "--scheme", "robust-with-intf", "--out", tmp.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn eval_from_scenario_file() {
    let tmp = tempfile::tempdir().unwrap();
    let path = tmp.path().join("small.json");
    let mut file = preset_file("paper-fig3").unwrap();
    file.irs.grid.rows = 2;
    file.irs.grid.cols = 2;
    file.write(&path).unwrap();
    let dir = tmp.path().join("eval");
    run_ok(&[
        "eval", "--scenario", path.to_str().unwrap(), "--schemes", "proposed",
        "--samples", "50", "--iterations", "10", "--out", dir.to_str().unwrap(),
    ]);
    let text = std::fs::read_to_string(dir.join("results.csv")).unwrap();
    assert!(text.lines().nth(1).unwrap().starts_with("small,proposed,none,"));
}

#[test]
fn bad_inputs_exit_with_errors() {
    let tmp = tempfile::tempdir().unwrap();
    let out_dir = tmp.path().join("x");
    let out = out_dir.to_str().unwrap();
    let r = irs(&["eval", "--preset", "nope", "--out", out]);
    assert_eq!(r.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&r.stderr).contains("nope"));

    let bad = tmp.path().join("bad.json");
    std::fs::write(&bad, "{ not json").unwrap();
    let r = irs(&["eval", "--scenario", bad.to_str().unwrap(), "--out", out]);
    assert_eq!(r.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&r.stderr).contains("bad.json"));

    let r = irs(&["sweep", "--sweep", "irs-size", "--values", "4", "--schemes", "best", "--out", out]);
    assert!(!r.status.success());
    let r = irs(&["sweep", "--sweep", "irs-size", "--values", "4", "--samples", "0", "--out", out]);
    assert_eq!(r.status.code(), Some(2));
    assert!(!out_dir.join("results.csv").exists());
}

#[test]
fn oracle_validation_passes() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run_ok(&[
        "validate-oracles", "--scenarios", "2", "--samples", "100000", "--out", tmp.path().to_str().unwrap(),
    ]);
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert_eq!(stdout.lines().filter(|l| l.starts_with("PASS")).count(), 5);
    assert!(tmp.path().join("oracles.json").exists());
}
