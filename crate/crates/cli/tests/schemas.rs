use serde_json::Value;
use std::path::PathBuf;
use std::process::Command;

fn repo(rel: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..").join(rel)
}

fn output(args: &[&str]) -> Value {
    let out = Command::new(env!("CARGO_BIN_EXE_regionforge"))
        .arg("--json")
        .arg("--findings-ok")
        .args(args)
        .env_remove("REGIONFORGE_DEPTH")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap()
}

fn check(schema: &str, doc: &Value) {
    let text = std::fs::read_to_string(repo("docs/schemas").join(schema)).unwrap();
    let schema_json: Value = serde_json::from_str(&text).unwrap();
    let v = jsonschema::validator_for(&schema_json).unwrap_or_else(|e| panic!("{schema}: {e}"));
    let errors: Vec<String> = v.iter_errors(doc).map(|e| format!("{} at {}", e, e.instance_path())).collect();
    assert!(errors.is_empty(), "{schema}:\n{}", errors.join("\n"));
}

#[test]
fn outputs_match_schemas() {
    let m = |n: &str| repo(&format!("crates/corpus/models/{n}.mml")).display().to_string();
    let (discount, netting, ordering) = (m("discount"), m("netting"), m("ordering"));
    check("decomposition.schema.json", &output(&["decompose", &discount, "discount"]));
    check("decomposition.schema.json", &output(&["decompose", &ordering, "rank"]));
    check("testvectors.schema.json", &output(&["testgen", &discount, "discount"]));
    check("verdict.schema.json", &output(&["verify", &netting, "efficiency", "--depth", "2"]));
    check("verdict.schema.json", &output(&["verify", &netting, "zero_sum", "--depth", "2"]));
    check("verdict.schema.json", &output(&["verify", &ordering, "lt_transitive"]));
    check("verdict.schema.json", &output(&["instance", &discount, "big_premium"]));
    check("verdict.schema.json", &output(&["instance", &ordering, "irreflexive"]));

    let project = repo("crates/corpus/projects/example").display().to_string();
    check("status.schema.json", &output(&["scan", &project]));
    check("plan.schema.json", &output(&["plan", &project]));

    let radar = repo("crates/corpus/fixtures/radar.json");
    check("report.schema.json", &output(&["score", "--in", radar.to_str().unwrap()]));
}

#[test]
fn fixtures_match_assessment_schema() {
    for f in ["radar.json", "q1.json"] {
        let text = std::fs::read_to_string(repo("crates/corpus/fixtures").join(f)).unwrap();
        check("assessments.schema.json", &serde_json::from_str(&text).unwrap());
    }
}

#[test]
fn formalized_status_matches_schema() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("a.mml"), "let f (x : int) : int = x + 1\n").unwrap();
    std::fs::write(dir.path().join("b.mml"), "import a (f)\n\nlet g (x : int) : int = f x\n").unwrap();
    std::fs::write(dir.path().join("c.mml"), "let broken (x : int) : int = x +\n").unwrap();
    let root = dir.path().to_str().unwrap();
    check("status.schema.json", &output(&["formalize", root]));
    let text = std::fs::read_to_string(dir.path().join(".regionforge/status.json")).unwrap();
    check("status.schema.json", &serde_json::from_str(&text).unwrap());
}

#[test]
fn schemas_reject_malformed_documents() {
    let text = std::fs::read_to_string(repo("docs/schemas/plan.schema.json")).unwrap();
    let v = jsonschema::validator_for(&serde_json::from_str(&text).unwrap()).unwrap();
    let bad = serde_json::json!({"schema_version": 1, "base": "x", "warnings": [], "tasks": [{"path": "a.mml", "reason": "whim"}]});
    assert!(!v.is_valid(&bad));
    let text = std::fs::read_to_string(repo("docs/schemas/assessments.schema.json")).unwrap();
    let v = jsonschema::validator_for(&serde_json::from_str(&text).unwrap()).unwrap();
    assert!(!v.is_valid(&serde_json::json!([{"model": "m", "question": "q", "metric": "nope"}])));
}
