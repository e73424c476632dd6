use std::path::Path;
use std::process::{Command, Output};

const CONFIG: &str = r#"{
    "construction": {"kind": "cone", "theta": 0.5, "w": 2, "n1": 2, "h1": 100, "levels": 3,
                     "growth": {"policy": "geometric", "ratio": 10.0}},
    "experiment": {"sweeps": [{"output": "sweep", "region": {"kind": "tube", "u": [1.0, 2.0], "v": [0.0, 1.0]}, "grid": [2, 2]}]}
}"#;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tubeslice"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, body: &str) -> String {
    let p = dir.join("cfg.json");
    std::fs::write(&p, body).unwrap();
    p.display().to_string()
}

#[test]
fn countdim_to_stdout() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), CONFIG);
    let out = run(&["countdim", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(
        text.lines().next(),
        Some("level,scale_repr,count_lo,count_hi,ratio_lo,ratio_hi,mode")
    );
    assert_eq!(text.lines().count(), 4);
}

#[test]
fn outputs_go_to_out_dir() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), CONFIG);
    let out_dir = dir.path().join("res");
    let out_s = out_dir.display().to_string();
    assert_eq!(
        run(&["generate", "--config", &cfg, "--out", &out_s]).status.code(),
        Some(0)
    );
    assert!(out_dir.join("chunks.json").exists());
    assert!(out_dir.join("points.csv").exists());
    assert_eq!(
        run(&["slicedim", "--config", &cfg, "--out", &out_s, "--u", "-3", "--v", "0"])
            .status
            .code(),
        Some(0)
    );
    assert!(out_dir.join("slicedim.csv").exists());
    assert_eq!(
        run(&["sweep", "--config", &cfg, "--out", &out_s]).status.code(),
        Some(0)
    );
    assert!(out_dir.join("sweep.csv").exists());
    let plot = run(&["emit-plot-data", &out_dir.join("slicedim.csv").display().to_string()]);
    assert_eq!(plot.status.code(), Some(0));
    assert!(String::from_utf8(plot.stdout).unwrap().starts_with("series,level,x,y"));
}

#[test]
fn verify_exit_codes() {
    let ok = run(&["verify", "fattened", "--format", "json"]);
    assert_eq!(ok.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&ok.stdout).unwrap();
    assert_eq!(v["pass"], true);
    assert_eq!(run(&["verify", "strip"]).status.code(), Some(1));
    assert_eq!(run(&["verify", "nope"]).status.code(), Some(2));
}

#[test]
fn usage_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write_config(dir.path(), &CONFIG.replace("\"theta\": 0.5", "\"theta\": 4.0"));
    assert_eq!(run(&["massdim", "--config", &bad]).status.code(), Some(2));
    assert_eq!(run(&["massdim"]).status.code(), Some(2));
    assert_eq!(run(&["frobnicate"]).status.code(), Some(2));
    let cfg = write_config(dir.path(), CONFIG);
    assert_eq!(run(&["slicedim", "--config", &cfg, "--u", "1"]).status.code(), Some(2));
}
