use std::fs;
use std::process::Command;

fn lab() -> Command {
    Command::new(env!("CARGO_BIN_EXE_lab"))
}

#[test]
fn list_prints_every_experiment() {
    let out = lab().arg("list").output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().count(), 12);
    for id in ["E1", "E8", "C1", "C2", "L1", "Q1"] {
        assert!(text.lines().any(|l| l.starts_with(id)), "{id} missing");
    }
}

#[test]
fn validate_config_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let good = dir.path().join("good.json");
    fs::write(
        &good,
        r#"{"experiment":"C1","d":2,"q":1,"delta":0.5,"nu":0.2,"resolutions":[9,17],"ensemble":1,"seed":7,"margin":0.25,"tol":1e-10,"out_dir":null}"#,
    )
    .unwrap();
    assert_eq!(lab().arg("validate-config").arg(&good).status().unwrap().code(), Some(0));
    let bad = dir.path().join("bad.json");
    fs::write(
        &bad,
        r#"{"experiment":"C1","d":2,"q":1,"delta":1.5,"nu":0.2,"resolutions":[9,17],"ensemble":1,"seed":7,"margin":0.25,"tol":1e-10,"out_dir":null}"#,
    )
    .unwrap();
    assert_eq!(lab().arg("validate-config").arg(&bad).status().unwrap().code(), Some(1));
    assert_eq!(lab().arg("validate-config").arg(dir.path().join("missing.json")).status().unwrap().code(), Some(1));
}

#[test]
fn run_writes_outputs_and_passes() {
    let dir = tempfile::tempdir().unwrap();
    let out = lab().args(["run", "C1", "--out"]).arg(dir.path()).output().unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("report.json")).unwrap()).unwrap();
    assert_eq!(report["config"]["experiment"], "C1");
    assert!(dir.path().join("series-sup_u_xy_vs_h.csv").exists());
    assert!(dir.path().join("series-sup_u_xy_vs_h.svg").exists());
}

#[test]
fn failed_verdict_exits_2() {
    // no pair of grids 16x apart, so the growth verdict cannot pass
    let dir = tempfile::tempdir().unwrap();
    let status = lab().args(["run", "C1", "--resolutions", "9,17,33", "--format", "json", "--out"]).arg(dir.path()).status().unwrap();
    assert_eq!(status.code(), Some(2));
}

#[test]
fn overrides_and_errors() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("e1.json");
    fs::write(
        &cfg,
        r#"{"experiment":"E1","d":2,"q":1,"delta":0.5,"nu":0.2,"resolutions":[17,33],"ensemble":2,"seed":7,"margin":0.25,"tol":1e-10,"out_dir":null}"#,
    )
    .unwrap();
    let out_dir = dir.path().join("out");
    let status = lab()
        .args(["run", "E1", "--ensemble", "1", "--seed", "3", "--format", "json", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&out_dir)
        .status()
        .unwrap();
    assert!(matches!(status.code(), Some(0) | Some(2)));
    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(out_dir.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["config"]["ensemble"], 1);
    assert_eq!(report["config"]["seed"], 3);
    // config for another experiment
    assert_eq!(lab().args(["run", "E2", "--config"]).arg(&cfg).status().unwrap().code(), Some(1));
    assert_eq!(lab().args(["run", "E42"]).status().unwrap().code(), Some(1));
    assert_eq!(lab().args(["run", "C1", "--delta", "2"]).status().unwrap().code(), Some(1));
}
