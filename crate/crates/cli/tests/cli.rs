use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn run(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cusplab"))
        .args(args)
        .arg("--set")
        .arg(format!("output.dir=\"{}\"", dir.display()))
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn report(dir: &Path, stem: &str) -> Value {
    serde_json::from_str(&fs::read_to_string(dir.join(format!("{stem}.json"))).unwrap()).unwrap()
}

#[test]
fn passing_run_exits_zero_and_writes_flat_report() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), &["counterexample"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert!(stdout.lines().filter(|l| l.starts_with("PASS ")).count() >= 7);
    let r = report(dir.path(), "counterexample");
    let map = r.as_object().unwrap();
    assert_eq!(r["tool_version"], Value::from("cusplab 0.1.0"));
    assert_eq!(r["command"], Value::from("counterexample"));
    assert_eq!(r["assertions_total"], r["assertions_passed"]);
    assert_eq!(r["config_domain_gamma"], Value::from(2.0));
    for (k, v) in map {
        assert!(!v.is_object() && !v.is_array(), "{k} is nested");
        if let Some(n) = v.as_number() {
            assert!(n.is_f64(), "{k} is not a float");
        }
    }
    let csv = fs::read_to_string(dir.path().join("counterexample.csv")).unwrap();
    assert!(csv.starts_with("quantity,value\n"));
    assert!(!csv.contains('\r'));
}

#[test]
fn failed_assertion_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    // the unweighted pressure space loses stability as the mesh reaches into the tip
    let o = run(dir.path(), &["infsup", "--set", "infsup.weight_exponent=0.0", "--set", "infsup.expect=\"stable\""]);
    assert_eq!(code(&o), 1);
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert!(stdout.contains("FAIL stable over last two levels"));
    let r = report(dir.path(), "infsup");
    assert_eq!(r["assertions_passed"], Value::from(1.0));
}

#[test]
fn decreasing_unweighted_inf_sup_passes() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), &["infsup", "--set", "infsup.weight_exponent=0.0", "--set", "infsup.expect=\"decreasing\""]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stdout));
}

#[test]
fn unknown_key_is_named_and_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), &["korn", "--set", "korn.bogus=1"]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("korn.bogus"));

    let cfg = dir.path().join("bad.toml");
    fs::write(&cfg, "[quadrature]\norder = 32\ngradin = 2.0\n").unwrap();
    let o = run(dir.path(), &["apcheck", "--config", cfg.to_str().unwrap()]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("quadrature.gradin"));
}

#[test]
fn invalid_parameters_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), &["divsolve", "--set", "divsolve.beta=5.0"]);
    assert_eq!(code(&o), 2);
    let o = run(dir.path(), &["apcheck", "--set", "domain.gamma=0.5"]);
    assert_eq!(code(&o), 2);
    let o = run(dir.path(), &["infsup", "--set", "domain.m=1"]);
    assert_eq!(code(&o), 2);
}

#[test]
fn numerical_failure_exits_three() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), &["divsolve", "--set", "divsolve.h_fd=10.0"]);
    assert_eq!(code(&o), 3);
    assert!(String::from_utf8_lossy(&o.stderr).contains("numerical failure"));
}

#[test]
fn reruns_are_bit_identical() {
    let dir = tempfile::tempdir().unwrap();
    for cmd in ["hardy", "korn", "lift-check"] {
        assert_eq!(code(&run(dir.path(), &[cmd, "--threads", "2"])), 0);
        let json = fs::read(dir.path().join(format!("{cmd}.json"))).unwrap();
        let csv = fs::read(dir.path().join(format!("{cmd}.csv"))).unwrap();
        assert_eq!(code(&run(dir.path(), &[cmd])), 0);
        assert_eq!(json, fs::read(dir.path().join(format!("{cmd}.json"))).unwrap(), "{cmd}");
        assert_eq!(csv, fs::read(dir.path().join(format!("{cmd}.csv"))).unwrap(), "{cmd}");
    }
}

#[test]
fn apcheck_table_matches_interval() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), &["apcheck", "--set", "domain.m=1", "--set", "apcheck.p=[2.0]"]);
    assert_eq!(code(&o), 0);
    let csv = fs::read_to_string(dir.path().join("apcheck.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("mu,p,n,m,in_ap"));
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 83);
    for r in rows {
        let mu: f64 = r[0].parse().unwrap();
        assert_eq!((r[2], r[3]), ("3", "1"));
        // n - m = 2, p = 2
        let want = -2.0 < mu && mu < 2.0;
        assert_eq!(r[4], want.to_string(), "mu = {mu}");
    }
}

#[test]
fn scan_beta_marks_endpoints() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), &["scan-beta", "--set", "scan_beta.steps=2", "--set", "scan_beta.order=24"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(dir.path().join("scan-beta.csv")).unwrap();
    let status: Vec<&str> = csv.lines().skip(1).map(|l| l.rsplit(',').next().unwrap()).collect();
    assert_eq!(status, ["out_of_range", "ok", "ok", "out_of_range"]);
}
