use serde_json::Value;
use std::path::PathBuf;
use std::process::{Command, Output};

fn corpus(rel: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../corpus").join(rel)
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_regionforge"))
        .args(args)
        .env_remove("REGIONFORGE_DEPTH")
        .output()
        .expect("spawn regionforge")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is one JSON document")
}

#[test]
fn decompose_discount_json() {
    let m = corpus("models/discount.mml");
    let out = run(&["--json", "decompose", m.to_str().unwrap(), "discount"]);
    assert_eq!(out.status.code(), Some(0));
    let j = json(&out);
    assert_eq!(j["regions"].as_array().unwrap().len(), 4);
    assert_eq!(j["exhaustive"], true);
}

#[test]
fn refutation_exit_codes() {
    let m = corpus("models/netting.mml");
    let m = m.to_str().unwrap();
    let out = run(&["verify", m, "efficiency", "--depth", "2"]);
    assert_eq!(out.status.code(), Some(1));
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("counterexample confirmed"), "{text}");

    let out = run(&["--findings-ok", "--json", "verify", m, "efficiency", "--depth", "2"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json(&out)["replay"]["confirmed"], true);
}

#[test]
fn depth_from_environment() {
    let m = corpus("models/netting.mml");
    let out = Command::new(env!("CARGO_BIN_EXE_regionforge"))
        .args(["--json", "verify", m.to_str().unwrap(), "zero_sum"])
        .env("REGIONFORGE_DEPTH", "2")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let j = json(&out);
    assert_eq!(j["bound"], 2, "{j}");
}

#[test]
fn eval_and_usage_errors() {
    let m = corpus("models/discount.mml");
    let m = m.to_str().unwrap();
    let out = run(&["eval", m, "discount", "{ amount = 101; customer = Standard }"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(String::from_utf8_lossy(&out.stdout).trim(), "10");

    assert_eq!(run(&["eval", m, "discount"]).status.code(), Some(2));
    assert_eq!(run(&["eval", m, "nope", "1"]).status.code(), Some(2));
    assert_eq!(run(&["decompose", "/nonexistent.mml", "f"]).status.code(), Some(2));
    assert_eq!(run(&["frobnicate"]).status.code(), Some(2));
    let out = run(&["--json", "decompose", m, "missing"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(json(&out)["error"].is_string());
}

#[test]
fn testgen_writes_file() {
    let dir = tempfile::tempdir().unwrap();
    let out_path = dir.path().join("test_discount.py");
    let m = corpus("models/discount.mml");
    let out = run(&["testgen", m.to_str().unwrap(), "discount", "--out", out_path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let text = std::fs::read_to_string(&out_path).unwrap();
    assert_eq!(text.matches("def test_").count(), 4);
    assert!(text.contains("o.amount >= 101"));
}

#[test]
fn score_radar() {
    let dir = tempfile::tempdir().unwrap();
    let report = dir.path().join("report.json");
    let csv = dir.path().join("report.csv");
    let input = corpus("fixtures/radar.json");
    let out = run(&[
        "score",
        "--in",
        input.to_str().unwrap(),
        "--report",
        report.to_str().unwrap(),
        "--csv",
        csv.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let j: Value = serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    let opus = j["models"].as_array().unwrap().iter().find(|m| m["model"] == "anthropic/claude-opus-4.5").unwrap();
    assert_eq!(opus["overall"].to_string(), "0.601");
    assert!(std::fs::read_to_string(&csv).unwrap().lines().count() > 5);

    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, r#"[{"model": "m", "question": "q", "metric": "nope", "score": 1}]"#).unwrap();
    assert_eq!(run(&["score", "--in", bad.to_str().unwrap()]).status.code(), Some(2));
}

#[test]
fn project_commands() {
    let dir = tempfile::tempdir().unwrap();
    let src = corpus("projects/example");
    for e in walkdir(&src) {
        let rel = e.strip_prefix(&src).unwrap();
        let dst = dir.path().join(rel);
        std::fs::create_dir_all(dst.parent().unwrap()).unwrap();
        std::fs::copy(&e, &dst).unwrap();
    }
    let root = dir.path().to_str().unwrap();

    let out = run(&["--json", "plan", root]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json(&out)["tasks"].as_array().unwrap().len(), 5);

    let out = run(&["--json", "formalize", root, "--depth", "4"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(dir.path().join(".regionforge/status.json").exists());

    let out = run(&["--json", "plan", root, "--target", "utils/helpers.mml"]);
    let tasks = json(&out)["tasks"].as_array().unwrap().clone();
    let paths: Vec<&str> = tasks.iter().map(|t| t["path"].as_str().unwrap()).collect();
    assert_eq!(paths, ["utils/math_ops.mml", "utils/helpers.mml"]);

    let main = dir.path().join("main.mml");
    let out = run(&["eval", main.to_str().unwrap(), "checkout_discount", "150", "true"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
}

fn walkdir(p: &std::path::Path) -> Vec<PathBuf> {
    let mut out = vec![];
    for e in std::fs::read_dir(p).unwrap() {
        let path = e.unwrap().path();
        if path.is_dir() {
            out.extend(walkdir(&path));
        } else {
            out.push(path);
        }
    }
    out
}

#[test]
fn gtt_refuted_at_depth_four() {
    let m = corpus("models/gtt.mml");
    let out = run(&["verify", m.to_str().unwrap(), "no_conflict", "--depth", "4"]);
    assert_eq!(out.status.code(), Some(1));
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("counterexample:") && text.contains("\"binding\""), "{text}");
}

#[test]
fn path_budget_exits_unknown() {
    let m = corpus("models/netting.mml");
    let out = run(&["--json", "verify", m.to_str().unwrap(), "zero_sum", "--depth", "3", "--max-paths", "5"]);
    assert_eq!(out.status.code(), Some(4));
    assert_eq!(json(&out)["verdict"], "unknown");
}
