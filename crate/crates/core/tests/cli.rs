use std::path::Path;
use std::process::{Command, Output};

use vrlat::harness::{check_record, read_json_lines};
use vrlat::model::ScenarioConfig;

fn vrlat(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_vrlat"))
        .args(args)
        .output()
        .expect("spawn vrlat")
}

const QUICK: [&str; 6] = ["--samples", "2000", "--saa-t", "10", "--iters-k", "5"];

fn sweep_to(path: &Path, format: &str, grid: &str) -> Output {
    let mut args = vec!["sweep", "--rho-grid", grid, "--variants", "equal-both", "--format", format];
    args.extend(QUICK);
    args.extend(["--out", path.to_str().unwrap()]);
    vrlat(&args)
}

#[test]
fn evaluate_prints_report() {
    let out = vrlat(&["evaluate", "--rho", "0.48", "--samples", "2000"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["counts"], serde_json::json!([13, 12, 12, 13]));
    assert!(v["report"]["weighted_total_s"].as_f64().unwrap() > 0.0);
}

#[test]
fn csv_has_header_and_one_line_per_record() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("r.csv");
    let out = sweep_to(&path, "csv", "0,0.48");
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(&path).unwrap();
    assert_eq!(text.lines().count(), 3);
    assert!(text.starts_with("rho_c,variant,"));
}

#[test]
fn json_lines_round_trip_and_revalidate() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("r.jsonl");
    let out = sweep_to(&path, "json-lines", "0.24,0.72");
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let records = read_json_lines(&path).unwrap();
    assert_eq!(records.len(), 2);
    let cfg = ScenarioConfig::reference();
    for r in &records {
        check_record(&cfg, r, 1e-8).unwrap();
        assert_eq!(r.timestamp, None);
        assert_eq!(r.eval_samples, 2000);
    }
}

#[test]
fn config_file_and_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let cfg_path = dir.path().join("run.toml");
    std::fs::write(&cfg_path, "[scenario]\ntotal_users = 20\n\n[sweep]\neval_seed = 4\n").unwrap();
    let out_path = dir.path().join("r.jsonl");
    let out = vrlat(&[
        "--config",
        cfg_path.to_str().unwrap(),
        "sweep",
        "--rho-grid",
        "0.5",
        "--variants",
        "equal-both",
        "--format",
        "json-lines",
        "--seed",
        "9",
        "--samples",
        "500",
        "--out",
        out_path.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let records = read_json_lines(&out_path).unwrap();
    assert_eq!(records[0].counts().flat(), [5, 5, 5, 5]);
    assert_eq!(records[0].eval_seed, 9);
}

#[test]
fn validation_failures_exit_with_one() {
    // 0.5 is not a multiple of 2/50
    let out = vrlat(&["evaluate", "--rho", "0.5"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("0.5"));

    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.toml");
    std::fs::write(&bad, "[scenario]\ntarget_success = 1.0\n").unwrap();
    let out = vrlat(&["--config", bad.to_str().unwrap(), "evaluate"]);
    assert_eq!(out.status.code(), Some(1));

    let unknown = dir.path().join("unknown.toml");
    std::fs::write(&unknown, "[scenario]\nusers = 3\n").unwrap();
    let out = vrlat(&["--config", unknown.to_str().unwrap(), "evaluate"]);
    assert_eq!(out.status.code(), Some(1));

    assert_eq!(vrlat(&["sweep", "--variants", "nope"]).status.code(), Some(1));
    assert_eq!(vrlat(&["evaluate", "--counts", "1,2,3,4"]).status.code(), Some(1));
}

#[test]
fn io_failures_exit_with_two() {
    let out = sweep_to(Path::new("/nonexistent-dir/out.csv"), "csv", "0");
    assert_eq!(out.status.code(), Some(2));
    let out = vrlat(&["--config", "/nonexistent-dir/run.toml", "evaluate"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn optimize_writes_trace() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("trace.csv");
    let mut args = vec!["optimize", "--rho", "0.48"];
    args.extend(&QUICK[2..]);
    args.extend(["--out", path.to_str().unwrap()]);
    let out = vrlat(&args);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(&path).unwrap();
    assert!(text.starts_with("iteration,saa_objective,best_so_far,is_best"));
    assert!(text.lines().count() <= 7);
    assert!(String::from_utf8_lossy(&out.stderr).contains("best iterate"));
}
