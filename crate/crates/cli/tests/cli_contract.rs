use std::path::Path;
use std::process::{Command, Output};

fn qdesign(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qdesign"))
        .current_dir(dir)
        .args(args)
        .env_remove(qdesign_cli::THREADS_ENV)
        .output()
        .expect("binary runs")
}

fn read(dir: &Path, name: &str) -> String {
    std::fs::read_to_string(dir.join(name)).unwrap()
}

#[test]
fn gap_json_fields_and_record() {
    let dir = tempfile::tempdir().unwrap();
    let out = qdesign(dir.path(), &["gap", "--n", "3", "--k", "1", "--seed", "5", "--out", "g.json"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v: serde_json::Value = serde_json::from_str(&read(dir.path(), "g.json")).unwrap();
    for key in ["n", "k", "delta_gap", "delta_walk", "solver", "residual", "seed", "wall_time"] {
        assert!(v.get(key).is_some(), "missing {key} in {v}");
    }
    assert!((v["delta_gap"].as_f64().unwrap() - 1.0).abs() < 1e-10);
    let record: serde_json::Value = serde_json::from_str(&read(dir.path(), "g.json.run.json")).unwrap();
    assert_eq!(record["seed"], 5);
    assert_eq!(record["status"], "ok");
    assert_eq!(record["command"], "gap");
}

#[test]
fn gap_csv_has_header_and_one_row() {
    let dir = tempfile::tempdir().unwrap();
    let out = qdesign(dir.path(), &["gap", "--n", "2", "--k", "2", "--seed", "1", "--out", "g.csv"]);
    assert!(out.status.success());
    let text = read(dir.path(), "g.csv");
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "n,k,delta_gap,delta_walk,solver,residual,seed,wall_time");
    assert_eq!(lines.len(), 2);
    assert_eq!(lines[1].split(',').count(), 8);
}

#[test]
fn usage_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(qdesign(dir.path(), &["gap", "--n", "3"]).status.code(), Some(2));
    assert_eq!(qdesign(dir.path(), &["no-such-command"]).status.code(), Some(2));
    assert_eq!(qdesign(dir.path(), &["depth", "--n", "3", "--k", "1", "--eps", "2"]).status.code(), Some(2));
}

#[test]
fn compute_errors_exit_one_with_record() {
    let dir = tempfile::tempdir().unwrap();
    let out = qdesign(dir.path(), &["gap", "--n", "11", "--k", "1", "--seed", "1", "--out", "big.json"]);
    assert_eq!(out.status.code(), Some(1));
    let record: serde_json::Value = serde_json::from_str(&read(dir.path(), "big.json.run.json")).unwrap();
    assert_eq!(record["status"], "error");
    assert!(record["error"].as_str().unwrap().contains("at most n = 10"), "{record}");
}

#[test]
fn thread_count_does_not_change_results() {
    let dir = tempfile::tempdir().unwrap();
    let base = ["frame-potential", "--n", "2", "--k", "1", "--t", "4", "--samples", "256", "--seed", "9"];
    for (threads, file) in [("1", "one.csv"), ("3", "three.csv")] {
        let mut args = base.to_vec();
        args.extend(["--threads", threads, "--out", file]);
        assert!(qdesign(dir.path(), &args).status.success());
    }
    assert_eq!(read(dir.path(), "one.csv"), read(dir.path(), "three.csv"));
}

#[test]
fn config_file_supplies_flags_and_cli_overrides() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("cfg.json"),
        r#"{"command": "gap", "n": 4, "k": 1, "seed": 3}"#,
    )
    .unwrap();
    let out = qdesign(dir.path(), &["--config", "cfg.json", "--n", "3", "--out", "c.json"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v: serde_json::Value = serde_json::from_str(&read(dir.path(), "c.json")).unwrap();
    assert_eq!(v["n"], 3);
    assert_eq!(v["seed"], 3);
}
