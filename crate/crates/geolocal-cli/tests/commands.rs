use std::path::Path;
use std::process::Command;

use geolocal_cli::commands::{reduce, ReduceConfig};
use geolocal_cli::config::content_hash;
use geolocal_cli::{Outcome, SCHEMA_VERSION, SEED_ENV};
use serde_json::Value;
use tempfile::TempDir;

fn geolocal(args: &[&str]) -> (i32, Value) {
    let out = Command::new(env!("CARGO_BIN_EXE_geolocal")).args(args).env_remove(SEED_ENV).output().unwrap();
    let code = out.status.code().unwrap();
    let doc = serde_json::from_slice(&out.stdout).unwrap_or(Value::Null);
    (code, doc)
}

fn write(dir: &TempDir, name: &str, body: &str) -> String {
    let p = dir.path().join(name);
    std::fs::write(&p, body).unwrap();
    p.to_str().unwrap().to_owned()
}

fn read(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn simulate_probability_in_range() {
    let (code, doc) = geolocal(&["simulate", "--lattice", "1x2", "--seed", "7"]);
    assert_eq!(code, 0);
    let d = doc["result"]["d_exact"].as_f64().unwrap();
    assert!((0.0..=1.0).contains(&d));
    assert_eq!(doc["schema_version"], SCHEMA_VERSION);
    assert_eq!(doc["config_hash"], content_hash(&doc["config"]));
}

#[test]
fn simulate_coefficient_file_with_taylor_row() {
    let dir = TempDir::new().unwrap();
    let values: Vec<f64> = (0..15).map(|i| 0.05 * (i as f64 - 7.0)).collect();
    let file = write(&dir, "g.json", &serde_json::to_string(&values).unwrap());
    let (code, doc) = geolocal(&["simulate", "--coeffs", &file, "--m", "20"]);
    assert_eq!(code, 0);
    let row = doc["result"]["taylor"].as_array().unwrap().iter().find(|r| r["m"] == 20).unwrap().clone();
    let bound = row["bound"].as_f64().unwrap();
    assert!(row["abs_diff"].as_f64().unwrap() <= bound + geolocal_cli::commands::ROUNDING_FLOOR);
    assert_eq!(row["within_bound"], true);
}

#[test]
fn zero_coefficients_give_unit_probability() {
    let dir = TempDir::new().unwrap();
    let file = write(&dir, "zero.json", &format!("{{\"values\": {:?}}}", vec![0.0; 15]));
    let (code, doc) = geolocal(&["simulate", "--coeffs", &file]);
    assert_eq!(code, 0);
    assert_eq!(doc["result"]["d_exact"].as_f64().unwrap(), 1.0);
}

#[test]
fn bad_configs_exit_with_usage() {
    let dir = TempDir::new().unwrap();
    let short = write(&dir, "short.json", "[1.0, 2.0]");
    let unknown = write(&dir, "cfg.json", r#"{"sed": 3}"#);
    for args in [
        vec!["simulate", "--lattice", "0x2"],
        vec!["simulate", "--coeffs", short.as_str()],
        vec!["simulate", "--coeffs", "/nonexistent/g.json"],
        vec!["stats", "--config", unknown.as_str()],
        vec!["stats", "--l", "3"],
        vec!["rbw-test", "--n", "4", "--k", "2"],
        vec!["reduce", "--corrupt", "1.5"],
        vec!["stats", "--jobs", "0"],
        vec!["stats", "-l", "5"],
    ] {
        assert_eq!(geolocal(&args).0, 2, "{args:?}");
    }
}

#[test]
fn rbw_default_passes_every_trial() {
    let (code, doc) = geolocal(&["rbw-test"]);
    assert_eq!(code, 0);
    assert_eq!(doc["result"]["trials"], 200);
    assert_eq!(doc["result"]["pass_rate"].as_f64().unwrap(), 1.0);
}

#[test]
fn rbw_exact_mode_recovers_coefficients() {
    let (code, doc) = geolocal(&["rbw-test", "--epsilon", "0", "--k", "3"]);
    assert_eq!(code, 0);
    assert_eq!(doc["result"]["mode"], "exact");
    assert!(doc["result"]["max_coeff_error"].as_f64().unwrap() < 1e-8);
}

#[test]
fn rbw_violated_budget_is_not_a_suite_failure() {
    let (code, doc) = geolocal(&["rbw-test", "--violate-k"]);
    assert_eq!(code, 0);
    assert_eq!(doc["result"]["regime"], "expected_failure");
    assert_eq!(doc["result"]["corruptions"], 3);
}

#[test]
fn reduce_without_extrapolation_is_accurate() {
    let (code, doc) = geolocal(&["reduce", "--lattice", "1x2", "--no-extrapolation", "--seed", "1", "--truth"]);
    assert_eq!(code, 0);
    assert!(doc["result"]["abs_error"].as_f64().unwrap() <= 1e-4);
}

#[test]
fn reduce_is_byte_identical_across_runs_and_jobs() {
    let dir = TempDir::new().unwrap();
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    let base = ["reduce", "--no-extrapolation", "--seed", "4", "--corrupt", "0.05", "--epsilon", "1e-10", "--output"];
    geolocal(&[&base[..], &[a.to_str().unwrap(), "--jobs", "1"]].concat());
    geolocal(&[&base[..], &[b.to_str().unwrap(), "--jobs", "2"]].concat());
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
}

#[test]
fn reduce_stage_failure_still_writes_report() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("r.json");
    let trace = dir.path().join("t.csv");
    let (code, _) = geolocal(&[
        "reduce",
        "--radial-samples",
        "1",
        "--output",
        out.to_str().unwrap(),
        "--trace",
        trace.to_str().unwrap(),
    ]);
    assert_eq!(code, 3);
    let doc = read(&out);
    assert_eq!(doc["outcome"], "stage_failure");
    assert_eq!(doc["result"]["status"]["state"], "failed");
    let header = std::fs::read_to_string(trace).unwrap();
    assert!(header.starts_with("stage,index,point_norm,value,corrupted"));
}

#[test]
fn corrupted_reduction_within_bound_for_most_seeds() {
    let within = (0..100)
        .filter(|&seed| {
            let cfg = ReduceConfig {
                seed,
                corrupt: 0.05,
                epsilon: 1e-10,
                no_extrapolation: true,
                truth: true,
                ..ReduceConfig::default()
            };
            let run = reduce(&cfg, None).unwrap();
            run.outcome == Outcome::Pass && run.result["within_certified_bound"] == true
        })
        .count();
    assert!(within >= 95, "{within}/100");
}

#[test]
fn hiding_check_residuals() {
    let (code, doc) = geolocal(&["hiding-check", "--triples", "500"]);
    assert_eq!(code, 0);
    assert_eq!(doc["result"]["n"], 3);
    assert!(doc["result"]["max_residual"].as_f64().unwrap() <= 1e-12);
    assert_eq!(doc["result"]["max_residual_x_zero"].as_f64().unwrap(), 0.0);
    assert!(doc["result"]["ensemble_check"]["z_score"].as_f64().unwrap().abs() <= 3.0);
}

#[test]
fn stats_moments() {
    let (code, doc) = geolocal(&["stats", "--l", "100", "--samples", "100000"]);
    assert_eq!(code, 0);
    let checks = &doc["result"]["checks"];
    let r2 = checks["mean_r2"]["observed"].as_f64().unwrap();
    assert!((0.98..=1.02).contains(&r2));
    let l = 100.0;
    let want = 1.0 / (2.0 * l) - 1.0 / (8.0 * l * l);
    assert!((checks["var_r"]["observed"].as_f64().unwrap() / want - 1.0).abs() <= 0.1);
    assert!(checks["angle_chi2"]["p_value"].as_f64().unwrap() > 0.01);
}

#[test]
fn term_table_counts() {
    let (code, doc) = geolocal(&["term-table", "--lattice", "3x3p"]);
    assert_eq!(code, 0);
    assert_eq!(doc["result"]["l"], 189);
    assert_eq!(doc["result"]["terms"].as_array().unwrap().len(), 189);
}

#[test]
fn seed_precedence() {
    let dir = TempDir::new().unwrap();
    let cfg = write(&dir, "cfg.json", r#"{"seed": 5, "samples": 1000}"#);
    let seed_of = |extra: &[&str], env: Option<&str>| {
        let mut cmd = Command::new(env!("CARGO_BIN_EXE_geolocal"));
        cmd.args(["stats", "--samples", "100"]).args(extra).env_remove(SEED_ENV);
        if let Some(v) = env {
            cmd.env(SEED_ENV, v);
        }
        let doc: Value = serde_json::from_slice(&cmd.output().unwrap().stdout).unwrap();
        (doc["config"]["seed"].as_u64().unwrap(), doc["config"]["samples"].as_u64().unwrap())
    };
    assert_eq!(seed_of(&[], None), (0, 100));
    assert_eq!(seed_of(&[], Some("9")), (9, 100));
    assert_eq!(seed_of(&["--config", &cfg], Some("9")), (5, 100));
    assert_eq!(seed_of(&["--config", &cfg, "--seed", "6"], Some("9")), (6, 100));
}

#[test]
fn help_exits_cleanly() {
    let out = Command::new(env!("CARGO_BIN_EXE_geolocal")).arg("--help").output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    for cmd in ["simulate", "rbw-test", "reduce", "hiding-check", "stats", "term-table"] {
        assert!(text.contains(cmd));
    }
}
