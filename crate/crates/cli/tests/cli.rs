use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_nodesparse"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| {
        panic!("bad json ({e}): {}", String::from_utf8_lossy(&out.stdout))
    })
}

fn generate(dir: &Path, extra: &[&str]) -> Value {
    let d = dir.to_str().unwrap();
    let mut args = vec!["generate", "--n", "120", "--m", "4", "--seed", "5", "--out", d];
    args.extend_from_slice(extra);
    let out = run(&args);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    json(&out)
}

fn strings(v: &Value) -> Vec<String> {
    v.as_array().unwrap().iter().map(|s| s.as_str().unwrap().to_string()).collect()
}

#[test]
fn generate_then_recover_finds_planted_nodes() {
    let tmp = tempfile::tempdir().unwrap();
    let truth = generate(tmp.path(), &["--sigma-b", "3", "--control", "2"]);
    let mut args = vec!["recover".to_string(), "--m".into(), "4".into(), "--control".into()];
    args.extend(strings(&truth["control"]));
    args.push("--treated".into());
    args.extend(strings(&truth["treated"]));
    let out = bin().args(&args).output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let rep = json(&out);
    assert_eq!(rep["support"], truth["support"]);
    assert!(rep["tau"].as_f64().unwrap() > 0.5);
    assert!(rep["kept_count"].as_u64().unwrap() > 0);
    assert_eq!(rep["converged"], Value::Bool(true));
}

#[test]
fn recover_with_refine_reports_each_estimator() {
    let tmp = tempfile::tempdir().unwrap();
    let truth = generate(tmp.path(), &["--sigma-b", "3"]);
    let refdir = tmp.path().join("ref");
    let mut args = vec!["recover".to_string(), "--m".into(), "4".into(), "--refine".into(), "all".into()];
    args.push("--refine-out".into());
    args.push(refdir.display().to_string());
    args.push("--control".into());
    args.extend(strings(&truth["control"]));
    args.push("--treated".into());
    args.extend(strings(&truth["treated"]));
    let rep = json(&bin().args(&args).output().unwrap());
    // Two matrices are not enough for the correction factor.
    assert_eq!(rep["refine"]["spec"]["status"], "ok");
    assert_eq!(rep["refine"]["mhat1"]["status"], "ok");
    assert_eq!(rep["refine"]["mhat2"]["status"], "error");
    assert!(refdir.join("spec.txt").exists());
}

#[test]
fn refine_subcommand_with_extra_copies() {
    let tmp = tempfile::tempdir().unwrap();
    let truth = generate(tmp.path(), &["--control", "4", "--treated", "0"]);
    let c = strings(&truth["control"]);
    let out = run(&[
        "refine", "--upper", &c[0], "--lower", &c[1], "--extra", &c[2], &c[3], "--mask", "0,1",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let rep = json(&out);
    for e in ["spec", "mhat1", "mhat2"] {
        assert_eq!(rep[e]["status"], "ok", "{e}");
    }
}

#[test]
fn refine_failure_exits_with_solver_code() {
    let tmp = tempfile::tempdir().unwrap();
    let truth = generate(tmp.path(), &["--control", "2", "--treated", "0"]);
    let c = strings(&truth["control"]);
    let out = run(&["refine", "--upper", &c[0], "--lower", &c[1], "--estimator", "mhat2"]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(json(&out)["mhat2"]["status"], "error");
}

#[test]
fn oracle_on_small_file() {
    let tmp = tempfile::tempdir().unwrap();
    let p = tmp.path().join("y.txt");
    // Nodes 1 and 3 carry all the energy.
    let mut rows = vec![vec![0.0; 6]; 6];
    for &(i, j) in &[(1, 0), (1, 2), (3, 4), (3, 5), (1, 3)] {
        rows[i][j] = 5.0;
        rows[j][i] = 5.0;
    }
    let mut text = String::from("6\n");
    for r in &rows {
        text += &(r.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(" ") + "\n");
    }
    std::fs::write(&p, text).unwrap();
    let out = run(&["oracle", p.to_str().unwrap(), "--m", "2"]);
    assert!(out.status.success());
    assert_eq!(json(&out)["support"], serde_json::json!([1, 3]));
}

#[test]
fn experiment_writes_csv() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("e.cfg");
    std::fs::write(&cfg, "preset = exp-tau\nn = 60\ntrials = 3\nrecord_runtime = false\n").unwrap();
    let csv = tmp.path().join("out.csv");
    let out = run(&["experiment", "--config", cfg.to_str().unwrap(), "--out", csv.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let body = std::fs::read_to_string(&csv).unwrap();
    let mut lines = body.lines();
    assert_eq!(lines.next(), Some("n,method,param,trial,value,runtime_ms,converged"));
    assert_eq!(lines.count(), 9);
}

#[test]
fn config_errors_exit_one() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("bad.cfg");
    std::fs::write(&cfg, "preset = exp-tau\nn = 60\nwat = 3\n").unwrap();
    let csv = tmp.path().join("out.csv");
    let out = run(&["experiment", "--config", cfg.to_str().unwrap(), "--out", csv.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains(":3:"));

    let out = run(&["experiment", "--preset", "nope", "--out", csv.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(run(&["recover", "--bogus"]).status.code(), Some(1));
}
