use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn run(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_screenagent"))
        .args(args)
        .current_dir(dir)
        .env("RUST_BACKTRACE", "0")
        .output()
        .expect("spawn cli")
}

fn ok_json(dir: &Path, args: &[&str]) -> Vec<Value> {
    let out = run(dir, args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap().lines().map(|l| serde_json::from_str(l).unwrap()).collect()
}

#[test]
fn roster_lists_every_task() {
    let d = tempfile::tempdir().unwrap();
    let v = &ok_json(d.path(), &["tasks", "list"])[0];
    let ids: Vec<&str> = v.as_array().unwrap().iter().map(|t| t["id"].as_str().unwrap()).collect();
    assert_eq!(ids.len(), 8);
    assert!(ids.contains(&"click-test") && ids.contains(&"enter-text") && ids.contains(&"drag-box"));
}

#[test]
fn oracle_eval_scores_full_marks_and_noisy_does_not() {
    let d = tempfile::tempdir().unwrap();
    let v = &ok_json(d.path(), &["eval", "--seeds", "10", "--json"])[0];
    assert_eq!(v["mean"], 100.0);
    let v = &ok_json(d.path(), &["eval", "--policy", "noisy", "--tasks", "click-test-2,click-color", "--seeds", "20", "--sequential"])[0];
    assert!(v["mean"].as_f64().unwrap() < 100.0);
    let table = run(d.path(), &["eval", "--seeds", "2", "--table"]);
    assert!(String::from_utf8(table.stdout).unwrap().contains("click-checkboxes"));
}

#[test]
fn record_fit_search_replay_pipeline() {
    let d = tempfile::tempdir().unwrap();
    let p = d.path();
    let tasks = "click-test-2,click-color";
    let rec = &ok_json(p, &["record-oracle", "--tasks", tasks, "--seeds", "30", "--base", "50000", "--out", "oracle.jsonl"])[0];
    assert_eq!(rec["episodes"], 60);
    ok_json(p, &["fit-value", "--demos", "oracle.jsonl", "--out", "value.json"]);
    let fit = &ok_json(p, &["fit-policy", "--demos", "oracle.jsonl", "--out", "policy.json"])[0];
    assert_eq!(fit["train"].as_u64().unwrap() + fit["dev"].as_u64().unwrap(), 60);
    let ev = &ok_json(p, &["eval", "--policy-file", "policy.json", "--tasks", tasks, "--seeds", "5", "--base", "50000"])[0];
    assert!(ev["mean"].as_f64().unwrap() > 0.0);

    let h = &ok_json(
        p,
        &["search-improve", "--task", "click-color", "--seeds", "10", "--policy", "noisy", "--value", "value.json", "--out", "h.jsonl"],
    )[0];
    assert_eq!(h["episodes"], 10);
    let r = &ok_json(p, &["replay", "--demos", "h.jsonl", "oracle.jsonl"])[0];
    assert_eq!(r["invalid"], 0);

    let its = ok_json(
        p,
        &["improve", "--tasks", tasks, "--seeds", "10", "--iterations", "2", "--policy", "noisy", "--value", "value.json", "--out-policy", "improved.json"],
    );
    assert_eq!(its.len(), 2);
    assert!(its[1]["greedy_mean"].as_f64().unwrap() >= its[0]["greedy_mean"].as_f64().unwrap());
    assert!(p.join("improved.json").exists());
}

#[test]
fn frames_are_embedded_on_request() {
    let d = tempfile::tempdir().unwrap();
    ok_json(d.path(), &["record-oracle", "--tasks", "click-test", "--seeds", "1", "--out", "f.jsonl", "--with-frames"]);
    let line = std::fs::read_to_string(d.path().join("f.jsonl")).unwrap();
    let v: Value = serde_json::from_str(line.lines().next().unwrap()).unwrap();
    assert!(v["steps"][0]["png"].as_str().is_some_and(|s| !s.is_empty()));
}

#[test]
fn tampered_demo_fails_replay() {
    let d = tempfile::tempdir().unwrap();
    ok_json(d.path(), &["record-oracle", "--tasks", "click-test", "--seeds", "1", "--out", "o.jsonl"]);
    let path = d.path().join("o.jsonl");
    let mut v: Value = serde_json::from_str(std::fs::read_to_string(&path).unwrap().trim()).unwrap();
    v["seed"] = Value::from(v["seed"].as_u64().unwrap() + 1);
    std::fs::write(&path, format!("{v}\n")).unwrap();
    let out = run(d.path(), &["replay", "--demos", "o.jsonl"]);
    assert!(!out.status.success());
}

#[test]
fn bad_arguments_are_rejected() {
    let d = tempfile::tempdir().unwrap();
    assert!(!run(d.path(), &["eval", "--policy", "bogus"]).status.success());
    assert!(!run(d.path(), &["eval", "--tasks", "no-such-task"]).status.success());
    let out = run(d.path(), &["search-improve", "--task", "click-color", "--out", "x.jsonl"]);
    assert!(String::from_utf8_lossy(&out.stderr).contains("--value"));
    assert!(!run(d.path(), &["search-improve", "--task", "click-color", "--out", "x.jsonl", "--c", "-1", "--lambda", "0"]).status.success());
}
