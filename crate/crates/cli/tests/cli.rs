use std::fs;
use std::path::PathBuf;
use std::process::{Command, Output};

fn intent(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_intent"))
        .args(args)
        .output()
        .unwrap()
}

fn stdout(out: &Output) -> String {
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("intent-cli-{}-{name}", std::process::id()));
    let _ = fs::remove_dir_all(&dir);
    fs::create_dir_all(&dir).unwrap();
    dir
}

#[test]
fn explain_prints_one_row() {
    let text = stdout(&intent(&["explain", "--obs", "PickAndPlace, Eat"]));
    let row = text.lines().nth(1).unwrap();
    let cols: Vec<&str> = row.split_whitespace().collect();
    assert_eq!(&cols[..2], ["[PickAndPlace,", "Eat]"]);
    assert_eq!(cols[2], "3");
    assert_eq!(cols[3], "0.5294");
    assert_eq!(&cols[4..6], ["Breakfast", "Breakfast"]);
}

#[test]
fn explain_rejects_unknown_actions() {
    let out = intent(&["explain", "--obs", "Juggle"]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("Juggle"));
}

#[test]
fn simulate_writes_a_replayable_log() {
    let dir = scratch("simulate");
    let log = dir.join("lunch.jsonl");
    let text = stdout(&intent(&[
        "simulate",
        "--goal",
        "lunch",
        "--seed",
        "3",
        "--log",
        log.to_str().unwrap(),
    ]));
    let row: Vec<&str> = text.lines().nth(1).unwrap().split_whitespace().collect();
    assert_eq!(&row[..4], ["Lunch", "3", "yes", "Lunch"]);
    let first = fs::read_to_string(&log).unwrap();
    assert!(first.lines().all(|l| l.starts_with("{\"seq\":")));
    assert!(first.contains("\"kind\":\"commitment\""));
    stdout(&intent(&[
        "simulate",
        "--goal",
        "lunch",
        "--seed",
        "3",
        "--log",
        log.to_str().unwrap(),
    ]));
    assert_eq!(fs::read_to_string(&log).unwrap(), first);
    fs::remove_dir_all(dir).unwrap();
}

#[test]
fn trained_tree_document_drives_the_pipeline() {
    let dir = scratch("train");
    let traces = dir.join("traces");
    let tree = dir.join("tree.txt");
    stdout(&intent(&[
        "gen-traces",
        "-o",
        traces.to_str().unwrap(),
        "--trials",
        "10",
        "--seed",
        "2024",
        "--noise",
        "0.05",
    ]));
    assert_eq!(fs::read_dir(&traces).unwrap().count(), 10);
    let report = stdout(&intent(&[
        "train-tree",
        traces.to_str().unwrap(),
        "-o",
        tree.to_str().unwrap(),
    ]));
    assert!(report.contains("grouped 10-fold accuracy"));

    // the same traces the pipeline trains on by default, so the logs agree
    let config = dir.join("intent.toml");
    fs::write(
        &config,
        format!("[documents]\ntree = {:?}\n", tree.to_str().unwrap()),
    )
    .unwrap();
    let (a, b) = (dir.join("a.jsonl"), dir.join("b.jsonl"));
    stdout(&intent(&[
        "simulate",
        "--goal",
        "drink",
        "--log",
        a.to_str().unwrap(),
    ]));
    stdout(&intent(&[
        "--config",
        config.to_str().unwrap(),
        "simulate",
        "--goal",
        "drink",
        "--log",
        b.to_str().unwrap(),
    ]));
    assert_eq!(
        fs::read_to_string(a).unwrap(),
        fs::read_to_string(b).unwrap()
    );
    fs::remove_dir_all(dir).unwrap();
}

#[test]
fn bad_config_is_reported() {
    let dir = scratch("config");
    let config = dir.join("bad.toml");
    fs::write(&config, "[pipeline]\nverfy = true\n").unwrap();
    let out = intent(&[
        "--config",
        config.to_str().unwrap(),
        "explain",
        "--obs",
        "Eat",
    ]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("verfy"));
    fs::remove_dir_all(dir).unwrap();
}

#[test]
fn bench_prints_all_tables() {
    let text = stdout(&intent(&["bench", "--trials", "2"]));
    assert!(text.contains("[Wash, Cook]"));
    assert!(text.contains("verified") && text.contains("not verified"));
    let accuracy_rows = text.lines().filter(|l| l.contains("100%")).count();
    assert_eq!(accuracy_rows, 6);
}
