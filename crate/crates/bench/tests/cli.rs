use std::fs;
use std::process::Command;

fn done() -> Command {
    Command::new(env!("CARGO_BIN_EXE_done"))
}

#[test]
fn run_writes_traces() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("cfg.json");
    fs::write(
        &config,
        r#"{"benchmark": "sphere", "num_features": 20, "iterations": 5, "repetitions": 2}"#,
    )
    .unwrap();
    let out = dir.path().join("out");
    let status = done()
        .args(["run", "--config"])
        .arg(&config)
        .arg("--out")
        .arg(&out)
        .args(["--seed", "7"])
        .output()
        .unwrap();
    assert!(
        status.status.success(),
        "{}",
        String::from_utf8_lossy(&status.stderr)
    );
    assert!(out.join("run_000.csv").exists() && out.join("run_001.csv").exists());
    let summary = fs::read_to_string(out.join("summary.json")).unwrap();
    assert!(summary.contains("\"seed\": 7"));
}

#[test]
fn misspelled_benchmark_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("cfg.json");
    fs::write(&config, r#"{"benchmark": "sphere"}"#).unwrap();
    let out = done()
        .args(["run", "--config"])
        .arg(&config)
        .args(["--benchmark", "camelbak"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(
        err.contains("camelback") && err.contains("robot-arm"),
        "{err}"
    );
}

#[test]
fn usage_errors_exit_2() {
    assert_eq!(
        done().arg("frobnicate").output().unwrap().status.code(),
        Some(2)
    );
    assert_eq!(
        done().args(["run"]).output().unwrap().status.code(),
        Some(2)
    );
    let missing = done()
        .args(["run", "--config", "/nonexistent/cfg.json"])
        .output()
        .unwrap();
    assert_eq!(missing.status.code(), Some(2));
    let suite = done()
        .args(["validate-theory", "--suite", "nope"])
        .output()
        .unwrap();
    assert_eq!(suite.status.code(), Some(2));
}

#[test]
fn unwritable_output_exits_1() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("cfg.json");
    fs::write(
        &config,
        r#"{"benchmark": "sphere", "num_features": 10, "iterations": 2}"#,
    )
    .unwrap();
    let blocker = dir.path().join("file");
    fs::write(&blocker, "").unwrap();
    let out = done()
        .args(["run", "--config"])
        .arg(&config)
        .arg("--out")
        .arg(blocker.join("sub"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn probe_cost_prints_pairs() {
    let out = done()
        .args([
            "probe-cost",
            "--D",
            "20",
            "--checkpoints",
            "5,50",
            "--window",
            "20",
        ])
        .output()
        .unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "n,seconds");
    assert_eq!(lines.len(), 3);
    assert!(lines[1].starts_with("5,") && lines[2].starts_with("50,"));
}

#[test]
fn validate_theory_single_suite() {
    let out = done()
        .args(["validate-theory", "--suite", "norm-identity"])
        .output()
        .unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.lines().all(|l| l.starts_with("PASS")), "{text}");
}
