use std::path::Path;
use std::process::{Command, Output};

use eigenflow::initial::initial_system;
use eigenflow::homotopy::DEFAULT_MAX_STEPS;
use eigenflow_cli::bench::{self, BenchConfig, Ensemble, CSV_HEADER};
use serde_json::Value;

fn eigenflow(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_eigenflow"))
        .args(args)
        .current_dir(dir)
        .env_remove("EIGENFLOW_SEED")
        .output()
        .expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) {
    std::fs::write(dir.join(name), text).unwrap();
}

fn config(ns: Vec<usize>, sigmas: Vec<f64>, trials: u64, seed: u64, ensemble: Ensemble) -> BenchConfig {
    BenchConfig {
        ns,
        sigmas,
        trials,
        seed,
        all: false,
        jobs: None,
        wall_time: false,
        max_steps: DEFAULT_MAX_STEPS,
        ensemble,
    }
}

#[test]
fn solve_diagonal_file() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "d.json", r#"{"n":3,"re":[[1,0,0],[0,2,0],[0,0,3]],"im":[[0,0,0],[0,0,0],[0,0,0]]}"#);
    let out = eigenflow(&["solve", "d.json", "--all"], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let json: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(json["n"], 3);
    assert_eq!(json["status"], "converged");
    let mut lambdas: Vec<f64> = json["pairs"]
        .as_array()
        .unwrap()
        .iter()
        .map(|p| p["lambda"][0].as_f64().unwrap())
        .collect();
    lambdas.sort_by(f64::total_cmp);
    for (got, want) in lambdas.iter().zip([1.0, 2.0, 3.0]) {
        assert!((got - want).abs() <= 1e-8, "{got}");
    }
    for p in json["pairs"].as_array().unwrap() {
        assert!(p["K"].as_u64().unwrap() > 0);
        assert!(p["mu"].as_f64().unwrap() >= 0.5f64.sqrt() - 1e-9);
    }
}

#[test]
fn single_solve_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "a.json", r#"{"n":2,"re":[[1,2],[3,-1]],"im":[[0.5,0],[0,0.25]]}"#);
    let a = eigenflow(&["solve", "a.json", "--single", "--seed", "7"], dir.path());
    let b = eigenflow(&["solve", "a.json", "--single", "--seed", "7"], dir.path());
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    let json: Value = serde_json::from_slice(&a.stdout).unwrap();
    assert_eq!(json["pairs"].as_array().unwrap().len(), 1);
}

#[test]
fn seed_falls_back_to_environment() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "a.json", r#"{"n":3,"re":[[1,2,0],[3,-1,1],[0,1,2]]}"#);
    let flag = eigenflow(&["solve", "a.json", "--single", "--seed", "9"], dir.path());
    let env = Command::new(env!("CARGO_BIN_EXE_eigenflow"))
        .args(["solve", "a.json", "--single"])
        .current_dir(dir.path())
        .env("EIGENFLOW_SEED", "9")
        .output()
        .unwrap();
    assert_eq!(flag.stdout, env.stdout);
}

#[test]
fn ragged_rows_exit_2_naming_the_row() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "r.json", r#"{"n":3,"re":[[1,2,3],[4,5],[6,7,8]]}"#);
    let out = eigenflow(&["solve", "r.json"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("row 1"));
}

#[test]
fn bad_invocations_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(eigenflow(&["verify", "nosuch"], dir.path()).status.code(), Some(2));
    assert_eq!(eigenflow(&["bench-avg", "--n", "2"], dir.path()).status.code(), Some(2));
    assert_eq!(eigenflow(&["bench-avg", "--n", "1", "--trials", "2"], dir.path()).status.code(), Some(2));
    assert_eq!(eigenflow(&["solve", "missing.json"], dir.path()).status.code(), Some(2));
    write(dir.path(), "z.json", r#"{"n":2,"re":[[0,0],[0,0]]}"#);
    let out = eigenflow(&["bench-smoothed", "--center", "z.json", "--trials", "2"], dir.path());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn bench_avg_writes_csv_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["bench-avg", "--n", "2", "--trials", "20", "--sigma", "1", "--seed", "1", "--out", "r.csv"];
    let out = eigenflow(&args, dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(dir.path().join("r.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some(CSV_HEADER));
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 20);
    assert!(rows.iter().all(|r| r.split(',').nth(5) == Some("converged")));
    let summary: Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("r.json")).unwrap()).unwrap();
    assert_eq!(summary["failures"], 0);

    let again = eigenflow(&args, dir.path());
    assert_eq!(again.status.code(), Some(0));
    assert_eq!(std::fs::read_to_string(dir.path().join("r.csv")).unwrap(), csv);
}

#[test]
fn mean_k_grows_from_n2_to_n4() {
    let report = bench::run(&config(vec![2, 4], vec![1.0], 20, 1, Ensemble::Average)).unwrap();
    let g = &report.summary.groups;
    assert_eq!(report.summary.failures, 0);
    assert!(g[1].mean_k > g[0].mean_k, "{} vs {}", g[1].mean_k, g[0].mean_k);
}

#[test]
fn smoothed_at_normalized_start_matrix() {
    let center = initial_system(4).unwrap().m;
    let report = bench::run(&config(vec![4], vec![1.0], 10, 1, Ensemble::Smoothed { center: Some(center) })).unwrap();
    assert_eq!(report.rows.len(), 10);
    assert_eq!(report.summary.failures, 0);
    assert!(report.summary.notices.is_empty());
}

#[test]
fn smoothed_center_is_normalized_with_notice() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "c.json", r#"{"n":2,"re":[[3,0],[0,-4]]}"#);
    let out = eigenflow(&["bench-smoothed", "--center", "c.json", "--trials", "2", "--seed", "4"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stderr).contains("notice"));
    let csv = String::from_utf8(out.stdout).unwrap();
    assert_eq!(csv.lines().count(), 3);
}

#[test]
fn condition_reports_normal_formula() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "t.json", r#"{"n":2,"re":[[1,0],[0,-1]],"lambda":[1,0],"v":[[1,0],[0,0]]}"#);
    let out = eigenflow(&["condition", "t.json"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    let json: Value = serde_json::from_slice(&out.stdout).unwrap();
    // ‖A‖_F / |1 − (−1)| = √2/2
    let mu = json["mu"].as_f64().unwrap();
    assert!((mu - 0.5f64.sqrt()).abs() < 1e-12, "{mu}");
    assert_eq!(json["well_posed"], true);
}

#[test]
fn verify_suite_passes() {
    let dir = tempfile::tempdir().unwrap();
    let out = eigenflow(&["verify", "lowerbound", "--seed", "2"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.lines().all(|l| l.starts_with("PASS")), "{text}");
}

#[test]
fn trace_matches_step_counts() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "a.json", r#"{"n":2,"re":[[0.5,1],[-1,0.25]]}"#);
    let out = eigenflow(&["solve", "a.json", "--trace", "t.csv"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    let json: Value = serde_json::from_slice(&out.stdout).unwrap();
    let total: u64 = json["pairs"].as_array().unwrap().iter().map(|p| p["K"].as_u64().unwrap()).sum();
    let trace = std::fs::read_to_string(dir.path().join("t.csv")).unwrap();
    assert_eq!(trace.lines().next(), Some("path_index,step,tau,delta_tau,t,mu,residual"));
    assert_eq!(trace.lines().count() as u64, total + 1);
}
