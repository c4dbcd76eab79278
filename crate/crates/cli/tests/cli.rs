use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

const INFEASIBLE: &str = r#"{"num_vars":1,"packing":{"rows":1,"entries":[[0,0,2.0]],"rhs":[1.0]},"covering":{"rows":1,"entries":[[0,0,1.0]],"rhs":[1.0]}}"#;

fn mpc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mpc")).args(args).output().expect("binary runs")
}

fn path(dir: &TempDir, name: &str) -> String {
    dir.path().join(name).to_string_lossy().into_owned()
}

fn json(p: &str) -> Value {
    serde_json::from_slice(&std::fs::read(p).unwrap()).unwrap()
}

/// Solution JSON with the wall-clock field removed.
fn without_time(p: &str) -> Value {
    let mut v = json(p);
    v["stats"].as_object_mut().unwrap().remove("wall_time_secs");
    v
}

fn generated(dir: &TempDir) -> String {
    let inst = path(dir, "feas.json");
    let out = mpc(&["gen", "--seed", "11", "--vars", "15", "--output", &inst]);
    assert!(out.status.success());
    inst
}

#[test]
fn solve_feasible_exits_zero() {
    let dir = TempDir::new().unwrap();
    let inst = generated(&dir);
    let sol = path(&dir, "out.json");
    let out = mpc(&["solve", "--input", &inst, "--epsilon", "0.1", "--algorithm", "phased", "--output", &sol]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json(&sol)["status"], "feasible");
}

#[test]
fn solve_infeasible_exits_two() {
    let dir = TempDir::new().unwrap();
    let inst = path(&dir, "infeas.json");
    std::fs::write(&inst, INFEASIBLE).unwrap();
    for alg in ["generic", "phased", "parallel"] {
        let out = mpc(&["solve", "--input", &inst, "--epsilon", "0.1", "--algorithm", alg]);
        assert_eq!(out.status.code(), Some(2));
        let v: Value = serde_json::from_slice(&out.stdout).unwrap();
        assert_eq!(v["status"], "infeasible");
    }
}

#[test]
fn check_reports_slack() {
    let dir = TempDir::new().unwrap();
    let inst = generated(&dir);
    let sol = path(&dir, "out.json");
    assert!(mpc(&["solve", "--input", &inst, "--output", &sol]).status.success());
    let out = mpc(&["check", "--input", &inst, "--solution", &sol]);
    assert_eq!(out.status.code(), Some(0));
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["ok"], true);
    assert!(v["covering_slack"].as_f64().unwrap() >= -1e-9);
}

#[test]
fn check_rejects_violations() {
    let dir = TempDir::new().unwrap();
    let inst = generated(&dir);
    let sol = path(&dir, "zero.json");
    std::fs::write(&sol, format!(r#"{{"status":"feasible","x":{:?}}}"#, vec![0.0; 15])).unwrap();
    let out = mpc(&["check", "--input", &inst, "--solution", &sol]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn planted_point_checks() {
    let dir = TempDir::new().unwrap();
    let inst = path(&dir, "g.json");
    let planted = path(&dir, "p.json");
    assert!(mpc(&["gen", "--seed", "4", "--output", &inst, "--planted", &planted]).status.success());
    assert_eq!(mpc(&["check", "--input", &inst, "--solution", &planted]).status.code(), Some(0));
}

#[test]
fn output_is_deterministic() {
    let dir = TempDir::new().unwrap();
    let inst = generated(&dir);
    for alg in ["generic", "phased", "parallel"] {
        let (a, b) = (path(&dir, "a.json"), path(&dir, "b.json"));
        for p in [&a, &b] {
            assert!(mpc(&["solve", "--input", &inst, "--algorithm", alg, "--output", p]).status.success());
        }
        assert_eq!(without_time(&a), without_time(&b));
    }
}

#[test]
fn threads_do_not_change_output() {
    let dir = TempDir::new().unwrap();
    let inst = generated(&dir);
    let (a, b) = (path(&dir, "a.json"), path(&dir, "b.json"));
    assert!(mpc(&["solve", "--input", &inst, "--algorithm", "parallel", "--threads", "1", "--output", &a]).status.success());
    assert!(mpc(&["solve", "--input", &inst, "--algorithm", "parallel", "--threads", "4", "--output", &b]).status.success());
    assert_eq!(without_time(&a), without_time(&b));
}

#[test]
fn gen_is_reproducible() {
    for kind in ["mixed", "tiny", "flow", "phantom"] {
        let a = mpc(&["gen", "--kind", kind, "--seed", "9"]);
        let b = mpc(&["gen", "--kind", kind, "--seed", "9"]);
        assert!(a.status.success());
        assert_eq!(a.stdout, b.stdout);
    }
}

#[test]
fn bad_flags_exit_one() {
    assert_eq!(mpc(&["solve", "--no-such-flag"]).status.code(), Some(1));
    assert_eq!(mpc(&["solve", "--input", "/nonexistent/file.json"]).status.code(), Some(1));
    let dir = TempDir::new().unwrap();
    let inst = generated(&dir);
    assert_eq!(mpc(&["solve", "--input", &inst, "--epsilon", "1.5"]).status.code(), Some(1));
    assert_eq!(mpc(&["solve", "--input", &inst, "--algorithm", "simplex"]).status.code(), Some(1));
}

#[test]
fn trace_csv_is_written() {
    let dir = TempDir::new().unwrap();
    let inst = generated(&dir);
    let trace = path(&dir, "trace.csv");
    assert!(mpc(&["solve", "--input", &inst, "--trace", &trace]).status.success());
    let text = std::fs::read_to_string(&trace).unwrap();
    assert!(text.starts_with("k,j,phi,psi"));
    assert!(text.lines().count() > 2);
}

#[test]
fn optimize_flow_and_tomo() {
    let dir = TempDir::new().unwrap();
    let inst = generated(&dir);
    let out = mpc(&["optimize", "--input", &inst, "--epsilon", "0.2"]);
    assert!(out.status.success());
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(v["lambda"].as_f64().unwrap() > 0.0);

    let net = path(&dir, "net.json");
    assert!(mpc(&["gen", "--kind", "flow", "--seed", "2", "--output", &net]).status.success());
    let out = mpc(&["flow", "--input", &net]);
    assert!(out.status.success());
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["status"], "feasible");

    let img = path(&dir, "x.pgm");
    let out = mpc(&["tomo", "--size", "6", "--image", &img]);
    assert!(out.status.success());
    assert!(std::fs::read(Path::new(&img)).unwrap().starts_with(b"P5\n6 6\n255\n"));
}

#[test]
fn bench_writes_csv() {
    let out = mpc(&["bench", "--sizes", "8,16", "--epsilons", "0.2"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().count(), 3);
    assert!(text.starts_with("algorithm,m,n,epsilon"));
}
