use std::process::{Command, Output};

use serde_json::Value;

fn run(args: &[&str]) -> (Output, Value) {
    let out = Command::new(env!("CARGO_BIN_EXE_stochsym"))
        .args(args)
        .env_remove("STOCHSYM_THREADS")
        .output()
        .expect("binary runs");
    let v = serde_json::from_slice(&out.stdout).unwrap_or(Value::Null);
    (out, v)
}

#[test]
fn doob_check_of_v2_is_all_zero() {
    let (out, v) = run(&["check", "bm1d", "--symmetry", "V2", "--mode", "doob"]);
    assert!(out.status.success());
    assert_eq!(v["schema_version"], 1);
    assert_eq!(v["body"]["results"][0]["residual"]["all_zero"], true);
}

#[test]
fn verify_all_passes() {
    let (out, v) = run(&["catalog", "--verify-all"]);
    assert!(out.status.success());
    assert_eq!(v["body"]["pass"], true);
    assert_eq!(v["body"]["models"].as_array().unwrap().len(), 4);
}

#[test]
fn classify_reports_witness() {
    let (out, v) = run(&["classify", "bm2d", "--symmetry", "Vbeta_z"]);
    assert!(out.status.success());
    assert_eq!(v["body"]["class"]["class"], "non_doob");
    assert_eq!(v["body"]["class"]["witness"], serde_json::json!(["x", "y"]));
}

#[test]
fn bridge_prints_u_coefficient() {
    let (out, v) = run(&["bridge", "bm1d", "--symmetry", "V2"]);
    assert!(out.status.success());
    assert_eq!(v["body"]["matches"]["name"], "Xi2");
    assert_eq!(v["body"]["round_trip"], true);
    let (out, v) = run(&["bridge", "bm1d", "--symmetry", "Xi1", "--reverse"]);
    assert!(out.status.success());
    assert_eq!(v["body"]["symmetry"]["h"], serde_json::json!(["-1"]));
}

#[test]
fn bracket_v5_v1() {
    let (out, v) = run(&["bracket", "bm1d", "--symmetry", "V5", "--symmetry", "V1"]);
    assert!(out.status.success());
    assert_eq!(v["body"]["bracket"]["y"], serde_json::json!(["1", "0"]));
}

#[test]
fn solve_reports_dimension_and_closure() {
    let (out, v) = run(&["solve", "bm1d", "--mode", "doob"]);
    assert!(out.status.success());
    assert_eq!(v["body"]["space"]["dimension"], 6);
    assert_eq!(v["body"]["space"]["closure"]["closed"], true);
}

#[test]
fn solve_with_basis_file() {
    let dir = std::env::temp_dir().join(format!("stochsym-basis-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let f = dir.join("basis.toml");
    std::fs::write(&f, "basis = [\"1\", \"x\", \"z\"]\n").unwrap();
    let (out, v) = run(&["solve", "bm1d", "--mode", "doob", "--basis", f.to_str().unwrap()]);
    assert!(out.status.success());
    assert!(v["body"]["space"]["dimension"].as_u64().unwrap() >= 3);
}

#[test]
fn mc_is_thread_independent() {
    let args = ["mc", "bm1d", "--transform", "shear_a1", "--paths", "4000", "--dt", "0.01", "--seed", "3"];
    let (a, va) = run(&[&args[..], &["--threads", "1"]].concat());
    let (b, vb) = run(&[&args[..], &["--threads", "4"]].concat());
    assert!(a.status.success() && b.status.success());
    assert_eq!(va, vb);
    assert_eq!(va["body"]["weak_compare"]["seeds"], serde_json::json!([3, 4]));
}

#[test]
fn mc_doob_transform_reports_pathwise() {
    let (out, v) = run(&["mc", "bm1d", "--transform", "girsanov_h1", "--paths", "2000", "--dt", "0.01"]);
    assert!(out.status.success());
    assert!(v["body"]["doob_pathwise"]["max"].as_f64().unwrap() < 1e-12);
}

#[test]
fn model_file_argument_and_export() {
    let dir = std::env::temp_dir().join(format!("stochsym-export-{}", std::process::id()));
    let (out, _) = run(&["catalog", "--export", dir.to_str().unwrap()]);
    assert!(out.status.success());
    let path = dir.join("ou.toml");
    let (out, v) = run(&["classify", path.to_str().unwrap(), "--symmetry", "Vt2"]);
    assert!(out.status.success());
    assert_eq!(v["body"]["class"]["class"], "almost_doob");
}

#[test]
fn failures_exit_nonzero() {
    let (out, _) = run(&["classify", "nosuch", "--symmetry", "V1"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("unknown model"));
    let (out, _) = run(&["check", "bm1d", "--symmetry", "V9"]);
    assert_eq!(out.status.code(), Some(2));
    let (out, _) = run(&["check", "bm1d", "--symmetry", "Valpha_z2", "--mode", "doob"]);
    assert_eq!(out.status.code(), Some(2));
}
