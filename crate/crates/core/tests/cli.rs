mod common;

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use common::*;

fn cli(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_clarify-rank"))
        .args(args)
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    assert!(o.status.success(), "stderr: {}", String::from_utf8_lossy(&o.stderr));
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn write_config(dir: &Path, click: &Path) -> String {
    let mut cfg = quick_config(dir);
    cfg.data.click = Some(click.to_path_buf());
    cfg.predictor.epochs = 3;
    let p = dir.join("cfg.json");
    fs::write(&p, cfg.to_json_pretty()).unwrap();
    p.display().to_string()
}

#[test]
fn show_config_applies_overrides() {
    let out = stdout(&cli(&[
        "show-config",
        "--set",
        "seed=5",
        "--set",
        "predictor.hidden=[4]",
    ]));
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["seed"], 5);
    assert_eq!(v["predictor"]["hidden"], serde_json::json!([4]));
}

#[test]
fn unknown_keys_fail_with_a_message() {
    let o = cli(&["show-config", "--set", "predictor.nope=1"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).starts_with("error:"));
}

#[test]
fn ingest_prints_corpus_stats() {
    let dir = tempfile::tempdir().unwrap();
    let p = explore_log(dir.path(), 30, 4);
    let v: serde_json::Value =
        serde_json::from_str(&stdout(&cli(&["ingest", "--click-explore", p.to_str().unwrap()]))).unwrap();
    assert_eq!(v["n_queries"], 30);
    assert!(v["n_pairs"].as_u64().unwrap() >= 30);
}

#[test]
fn preprocess_writes_split_files() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &click_log(dir.path(), 300, 2));
    let v: serde_json::Value = serde_json::from_str(&stdout(&cli(&["preprocess", "-c", &cfg]))).unwrap();
    let sizes = v["split_sizes"].as_array().unwrap();
    for (name, n) in ["train", "val", "test"].iter().zip(sizes) {
        let text = fs::read_to_string(dir.path().join("out").join(format!("{name}.tsv"))).unwrap();
        assert_eq!(text.lines().count() as u64, n.as_u64().unwrap() + 1, "{name}");
    }
}

#[test]
fn train_evaluate_and_report_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let click = click_log(dir.path(), 400, 3);
    let cfg = write_config(dir.path(), &click);
    let md = stdout(&cli(&["train-predictor", "-c", &cfg]));
    assert!(md.starts_with("# Engagement prediction"));

    let out = dir.path().join("out");
    let report = out.join("report.json");
    let again = stdout(&cli(&["report", report.to_str().unwrap()]));
    assert_eq!(md, again);
    let json = stdout(&cli(&["report", report.to_str().unwrap(), "--format", "json"]));
    assert_eq!(json, fs::read_to_string(&report).unwrap());

    let model = out.join("predictor_regression.mdl1");
    let eval: serde_json::Value = serde_json::from_str(&stdout(&cli(&[
        "evaluate",
        "--model",
        model.to_str().unwrap(),
        "--click",
        click.to_str().unwrap(),
    ])))
    .unwrap();
    assert_eq!(eval["n"], 400);
    assert!(eval["loss"].as_f64().unwrap() >= 0.0);

    let explore = explore_log(dir.path(), 80, 5);
    let rank_dir = dir.path().join("rank");
    let md = stdout(&cli(&[
        "train-ranker",
        "-c",
        &cfg,
        "--predictor-model",
        model.to_str().unwrap(),
        "--set",
        &format!("data.click_explore={}", explore.display()),
        "--set",
        &format!("output_dir={}", rank_dir.display()),
    ]));
    assert!(md.starts_with("# Ranking"));
    assert!(rank_dir.join("ranker_without_pue.mdl1").is_file());
}

#[test]
fn sweep_writes_a_summary() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &click_log(dir.path(), 300, 6));
    let grid = dir.path().join("grid.json");
    fs::write(&grid, r#"{"predictor.optim.lr": [0.001, 0.01]}"#).unwrap();
    let md = stdout(&cli(&["sweep", "-c", &cfg, "--grid", grid.to_str().unwrap()]));
    assert!(md.contains("**best**"));
    assert!(dir.path().join("out/sweep.json").is_file());
}
