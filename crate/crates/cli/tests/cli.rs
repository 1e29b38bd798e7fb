use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use spme_core::brownian::read_path_binary;

const SMOKE: &[&str] = &["--set", "grid.n=64", "--set", "solver.t_end=0.1"];
const MC_SMOKE: &[&str] = &[
    "--set",
    "grid.n=64",
    "--set",
    "solver.epsilon=0.05",
    "--set",
    "mc.horizon_max=1.0",
    "--set",
    "mc.horizon_points=4",
];

fn spme(out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_spme"))
        .arg("--out")
        .arg(out)
        .args(args)
        .env_remove("SPME_WORKERS")
        .output()
        .unwrap()
}

fn run_dir(out: &Output) -> PathBuf {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    PathBuf::from(String::from_utf8(out.stdout.clone()).unwrap().lines().last().unwrap())
}

fn manifest(dir: &Path) -> Value {
    serde_json::from_slice(&fs::read(dir.join("manifest.json")).unwrap()).unwrap()
}

fn digests(dir: &Path) -> Vec<(String, String)> {
    manifest(dir)["files"]
        .as_array()
        .unwrap()
        .iter()
        .map(|f| (f["name"].as_str().unwrap().to_string(), f["sha256"].as_str().unwrap().to_string()))
        .collect()
}

fn header(dir: &Path, file: &str) -> String {
    fs::read_to_string(dir.join(file)).unwrap().lines().next().unwrap().to_string()
}

#[test]
fn missing_config_file_exits_2() {
    let tmp = tempfile::tempdir().unwrap();
    let out = spme(tmp.path(), &["solve", "--config", "/nonexistent/spme.toml"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn unknown_suite_exits_2() {
    let tmp = tempfile::tempdir().unwrap();
    let out = spme(tmp.path(), &["validate", "entropy"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn invalid_field_exits_2_and_names_it() {
    let tmp = tempfile::tempdir().unwrap();
    let out = spme(tmp.path(), &["solve", "--set", "solver.epsilon=-1"]);
    assert_eq!(out.status.code(), Some(2));
    let out = spme(tmp.path(), &["solve", "--set", "grid.n=\"many\""]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("grid.n"));
}

#[test]
fn zero_workers_from_environment_exits_2() {
    let tmp = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_spme"))
        .args(["--out", tmp.path().to_str().unwrap(), "solve"])
        .args(SMOKE)
        .env("SPME_WORKERS", "0")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn exhausted_step_budget_exits_3() {
    let tmp = tempfile::tempdir().unwrap();
    let mut args = vec!["solve", "--set", "solver.max_steps=5"];
    args.extend(SMOKE);
    let out = spme(tmp.path(), &args);
    assert_eq!(out.status.code(), Some(3));
    let dirs: Vec<_> = fs::read_dir(tmp.path()).unwrap().collect();
    let m = manifest(&dirs[0].as_ref().unwrap().path());
    assert_eq!(m["status"], "failed");
}

#[test]
fn solve_writes_manifest_and_schemas() {
    let tmp = tempfile::tempdir().unwrap();
    let start = std::time::Instant::now();
    let mut args = vec!["solve"];
    args.extend(SMOKE);
    let dir = run_dir(&spme(tmp.path(), &args));
    assert!(start.elapsed().as_secs_f64() < 5.0);
    let name = dir.file_name().unwrap().to_str().unwrap();
    assert!(name.contains('T') && name.ends_with(&manifest(&dir)["config_digest"].as_str().unwrap()[..12]));

    let m = manifest(&dir);
    assert_eq!(m["status"], "complete");
    assert_eq!(m["subcommand"], "solve");
    assert_eq!(m["config"]["grid"]["n"], 64);
    for (file, sha) in digests(&dir) {
        assert_eq!(spme_core::io::sha256_hex(&fs::read(dir.join(&file)).unwrap()), sha, "{file}");
    }
    assert_eq!(header(&dir, "path.csv"), "t,B,B_eps");
    assert_eq!(header(&dir, "snapshots.csv"), "t,x,u");

    let (path, eps) = read_path_binary(fs::File::open(dir.join("path.bin")).unwrap()).unwrap();
    assert_eq!(eps, Some(0.01));
    assert_eq!(path.len(), fs::read_to_string(dir.join("path.csv")).unwrap().lines().count() - 1);
    // per frame: 8 magic bytes, 4 header f64, u64 count, 64 values
    let frames = fs::read(dir.join("snapshots.bin")).unwrap();
    assert_eq!(frames.len() % (8 + 8 * 4 + 8 + 8 * 64), 0);
    assert_eq!(&frames[..8], b"SPMEFRAM");
    let a = f64::from_le_bytes(frames[24..32].try_into().unwrap());
    assert_eq!(a, -1.0);
}

#[test]
fn rerun_with_manifest_reproduces_outputs() {
    let tmp = tempfile::tempdir().unwrap();
    let mut args = vec!["solve"];
    args.extend(SMOKE);
    let first = run_dir(&spme(tmp.path(), &args));
    let again = run_dir(&spme(tmp.path(), &args));
    assert_ne!(first, again);
    assert_eq!(digests(&first), digests(&again));
    let manifest_path = first.join("manifest.json");
    let replay = run_dir(&spme(tmp.path(), &["solve", "--config", manifest_path.to_str().unwrap()]));
    assert_eq!(digests(&first), digests(&replay));
}

#[test]
fn mc_is_independent_of_worker_count() {
    let tmp = tempfile::tempdir().unwrap();
    let run = |workers: &str| {
        let mut args = vec!["mc", "-n", "4", "--workers", workers];
        args.extend(MC_SMOKE);
        run_dir(&spme(tmp.path(), &args))
    };
    let (one, many) = (run("1"), run("4"));
    assert_eq!(fs::read(one.join("mc_summary.json")).unwrap(), fs::read(many.join("mc_summary.json")).unwrap());
    assert_eq!(digests(&one), digests(&many));
    assert_eq!(header(&one, "mc_summary.csv"), "T,p_ext,p_ext_lo,p_ext_hi,p_hat,p_hat_lo,p_hat_hi");
    let records = fs::read_to_string(one.join("records.csv")).unwrap();
    assert_eq!(records.lines().count(), 5);
    assert_eq!(fs::read_to_string(one.join("mc_summary.csv")).unwrap().lines().count(), 5);
}

#[test]
fn validate_barenblatt_passes_on_defaults() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = run_dir(&spme(tmp.path(), &["validate", "barenblatt"]));
    let report: Value = serde_json::from_slice(&fs::read(dir.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["suite"], "barenblatt");
    assert_eq!(report["passed"], true);
    let names: Vec<&str> = report["assertions"]
        .as_array()
        .unwrap()
        .iter()
        .map(|a| {
            for key in ["measured", "threshold", "relation", "passed"] {
                assert!(a.get(key).is_some(), "{key} missing");
            }
            a["name"].as_str().unwrap()
        })
        .collect();
    assert_eq!(names, ["l1_error", "free_boundary_error"]);
}

#[test]
fn corrupted_tolerance_fails_with_named_assertion() {
    let tmp = tempfile::tempdir().unwrap();
    let out = spme(tmp.path(), &["validate", "barenblatt", "--set", "barenblatt.l1_rel_tol=1e-9"]);
    assert_eq!(out.status.code(), Some(4));
    assert!(String::from_utf8_lossy(&out.stderr).contains("l1_error"));
    let dir = fs::read_dir(tmp.path()).unwrap().next().unwrap().unwrap().path();
    let report: Value = serde_json::from_slice(&fs::read(dir.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["passed"], false);
    assert_eq!(report["assertions"][0]["passed"], false);
    assert_eq!(manifest(&dir)["status"], "failed");
}

#[test]
fn ladder_commands_emit_tables() {
    let tmp = tempfile::tempdir().unwrap();
    let small = [
        "--set",
        "grid.n=48",
        "--set",
        "solver.t_end=0.4",
        "--set",
        "ladder.n_paths=2",
        "--set",
        "ladder.levels=[0.08, 0.04, 0.02]",
    ];
    let mut args = vec!["convergence"];
    args.extend(small);
    let dir = run_dir(&spme(tmp.path(), &args));
    assert_eq!(
        header(&dir, "convergence.csv"),
        "epsilon,epsilon_next,sup_l1,sup_l1_std_error,integrated_l1,integrated_head"
    );
    let mut args = vec!["contraction"];
    args.extend(small);
    let dir = run_dir(&spme(tmp.path(), &args));
    assert_eq!(
        header(&dir, "contraction.csv"),
        "epsilon,epsilon_hat,distance,std_error,t_sup,plain_distance,initial_term"
    );
}

#[test]
fn contraction_precondition_exits_2() {
    let tmp = tempfile::tempdir().unwrap();
    let out = spme(tmp.path(), &["contraction", "--set", "contraction.kappa=0.1"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn barenblatt_command_exports_oracle() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = run_dir(&spme(tmp.path(), &["barenblatt"]));
    assert_eq!(header(&dir, "barenblatt.csv"), "t,x,u,p");
    let report: Value = serde_json::from_slice(&fs::read(dir.join("barenblatt.json")).unwrap()).unwrap();
    // m = 2, C = 1: M = sqrt(C / k) = sqrt(6)
    assert!((report["support_rate"]["m_bar"].as_f64().unwrap() - 6f64.sqrt()).abs() < 1e-12);
}
