use regionforge_project::*;
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

const MATH: &str = "utils/math_ops.mml";
const HELPERS: &str = "utils/helpers.mml";
const ORDER: &str = "models/order.mml";
const PRICING: &str = "services/pricing.mml";
const MAIN: &str = "main.mml";

fn example() -> (tempfile::TempDir, PathBuf) {
    let src = Path::new(env!("CARGO_MANIFEST_DIR")).join("../corpus/projects/example");
    let dir = tempfile::tempdir().unwrap();
    for e in walkdir::WalkDir::new(&src) {
        let e = e.unwrap();
        let rel = e.path().strip_prefix(&src).unwrap();
        let to = dir.path().join(rel);
        if e.file_type().is_dir() {
            std::fs::create_dir_all(&to).unwrap();
        } else {
            std::fs::copy(e.path(), &to).unwrap();
        }
    }
    let root = dir.path().to_path_buf();
    (dir, root)
}

fn formalize_all(mm: &mut Metamodel) {
    let plan = plan_formalize(mm, None).unwrap();
    apply_plan(mm, &plan, &ApplyOptions::default()).unwrap();
}

fn edit(root: &Path, mm: &mut Metamodel, path: &str, text: Option<&str>) -> Plan {
    let ev = match text {
        Some(t) => {
            let existed = root.join(path).exists();
            std::fs::write(root.join(path), t).unwrap();
            if existed {
                ChangeEvent::Modified(path.into())
            } else {
                ChangeEvent::Created(path.into())
            }
        }
        None => {
            std::fs::remove_file(root.join(path)).unwrap();
            ChangeEvent::Deleted(path.into())
        }
    };
    let evs = vec![ev];
    assert!(mm.refresh(&evs).is_empty());
    plan_reformalization(mm, &evs)
}

fn artifacts(mm: &Metamodel) -> BTreeMap<String, (FormalizationStatus, Option<String>)> {
    mm.entries.iter().map(|(p, e)| (p.clone(), (e.status, e.artifact_hash.clone()))).collect()
}

#[test]
fn scan_builds_import_graph() {
    let (_d, root) = example();
    let mm = Metamodel::scan(&root).unwrap();
    assert_eq!(mm.entries.len(), 5);
    let mut edges = mm.edges();
    edges.sort();
    let want = vec![
        (MAIN.to_string(), PRICING.to_string()),
        (MAIN.to_string(), HELPERS.to_string()),
        (PRICING.to_string(), ORDER.to_string()),
        (HELPERS.to_string(), MATH.to_string()),
    ];
    let mut want = want;
    want.sort();
    assert_eq!(edges, want);
    assert!(mm.entries.values().all(|e| e.status == FormalizationStatus::Unknown));
}

#[test]
fn empty_dir_and_bad_root() {
    let d = tempfile::tempdir().unwrap();
    assert!(Metamodel::scan(d.path()).unwrap().entries.is_empty());
    assert!(matches!(Metamodel::scan(&d.path().join("missing")), Err(ProjectError::Root { .. })));
}

#[test]
fn import_cycle_is_rejected() {
    let d = tempfile::tempdir().unwrap();
    std::fs::write(d.path().join("a.mml"), "import b (g)\nlet f (x : int) : int = x\n").unwrap();
    std::fs::write(d.path().join("b.mml"), "import a (f)\nlet g (x : int) : int = x\n").unwrap();
    std::fs::write(d.path().join("c.mml"), "let h (x : int) : int = x\n").unwrap();
    let mut mm = Metamodel::scan(d.path()).unwrap();
    for p in ["a.mml", "b.mml"] {
        let e = &mm.entries[p];
        assert_eq!(e.status, FormalizationStatus::ErrorDuringValidation);
        assert!(e.diagnostics[0].contains("import cycle"), "{:?}", e.diagnostics);
    }
    formalize_all(&mut mm);
    assert_eq!(mm.entries["c.mml"].status, FormalizationStatus::AdmittedTransparent);
    assert_eq!(mm.entries["a.mml"].status, FormalizationStatus::ErrorDuringValidation);
}

#[test]
fn formalize_all_is_topological() {
    let (_d, root) = example();
    let mut mm = Metamodel::scan(&root).unwrap();
    let plan = plan_formalize(&mm, None).unwrap();
    assert_eq!(plan.tasks.len(), 5);
    assert!(plan.tasks.iter().all(|t| t.reason == Reason::NeverFormalized));
    let pos = |p: &str| plan.paths().iter().position(|q| *q == p).unwrap();
    for (a, b) in mm.edges() {
        assert!(pos(&b) < pos(&a), "{b} must precede {a}");
    }
    apply_plan(&mut mm, &plan, &ApplyOptions::default()).unwrap();
    for e in mm.entries.values() {
        assert_eq!(e.status, FormalizationStatus::AdmittedTransparent, "{}: {:?}", e.path, e.diagnostics);
    }
    let art = mm.entries[PRICING].artifacts.as_ref().unwrap();
    assert_eq!(art["directives"][0]["result"]["regions"].as_array().unwrap().len(), 4);
    assert!(plan_formalize(&mm, None).unwrap().is_empty());
}

#[test]
fn case1_leaf_change_replans_formalized_dependents() {
    let (_d, root) = example();
    let mut mm = Metamodel::scan(&root).unwrap();
    formalize_all(&mut mm);
    let before = artifacts(&mm);
    let src = std::fs::read_to_string(root.join(MATH)).unwrap();
    let plan = edit(&root, &mut mm, MATH, Some(&src.replace("a + b", "b + a")));
    assert_eq!(plan.paths(), vec![MATH, HELPERS, MAIN]);
    assert_eq!(plan.tasks[0].reason, Reason::SourceChanged);
    assert_eq!(plan.tasks[1].reason, Reason::DependencyChanged);
    apply_plan(&mut mm, &plan, &ApplyOptions::default()).unwrap();
    let after = artifacts(&mm);
    for p in [ORDER, PRICING] {
        assert_eq!(before[p], after[p]);
    }
    assert_ne!(before[MATH].1, after[MATH].1);
}

#[test]
fn case1_only_formalized_dependents() {
    let (_d, root) = example();
    let mut mm = Metamodel::scan(&root).unwrap();
    let plan = plan_formalize(&mm, Some(HELPERS)).unwrap();
    assert_eq!(plan.paths(), vec![MATH, HELPERS]);
    apply_plan(&mut mm, &plan, &ApplyOptions::default()).unwrap();
    let src = std::fs::read_to_string(root.join(MATH)).unwrap();
    let plan = edit(&root, &mut mm, MATH, Some(&format!("{src}\nlet sub (a : int) (b : int) : int = a - b\n")));
    assert_eq!(plan.paths(), vec![MATH, HELPERS]);
}

#[test]
fn case4_import_removed_from_unformalized_module() {
    let (_d, root) = example();
    let mut mm = Metamodel::scan(&root).unwrap();
    let plan = plan_formalize(&mm, Some(HELPERS)).unwrap();
    apply_plan(&mut mm, &plan, &ApplyOptions::default()).unwrap();
    let before = artifacts(&mm);
    let main = "import services.pricing (discount_for)\n\nlet checkout_discount (amount : int) (premium : bool) : int =\n  discount_for amount premium\n";
    let plan = edit(&root, &mut mm, MAIN, Some(main));
    assert!(plan.is_empty(), "{:?}", plan.tasks);
    assert!(!mm.edges().contains(&(MAIN.to_string(), HELPERS.to_string())));
    apply_plan(&mut mm, &plan, &ApplyOptions::default()).unwrap();
    assert_eq!(before, artifacts(&mm));
}

#[test]
fn case2_new_dependency_is_formalized_first() {
    let (_d, root) = example();
    let mut mm = Metamodel::scan(&root).unwrap();
    formalize_all(&mut mm);
    std::fs::create_dir_all(root.join("utils/extra")).unwrap();
    let plan = edit(&root, &mut mm, "utils/extra/rounding.mml", Some("let half (x : int) : int = x div 2\n"));
    assert_eq!(plan.paths(), vec!["utils/extra/rounding.mml"]);
    apply_plan(&mut mm, &plan, &ApplyOptions::default()).unwrap();
    let helpers = "import utils.math_ops (add, clamp)\nimport utils.extra.rounding (half)\n\nlet percent (x : int) : int = clamp 0 100 (half x)\n";
    let plan = edit(&root, &mut mm, HELPERS, Some(helpers));
    assert_eq!(plan.paths(), vec![HELPERS, MAIN]);
    apply_plan(&mut mm, &plan, &ApplyOptions::default()).unwrap();
    assert_eq!(mm.entries[HELPERS].status, FormalizationStatus::AdmittedTransparent);
}

#[test]
fn deletion_marks_dependents() {
    let (_d, root) = example();
    let mut mm = Metamodel::scan(&root).unwrap();
    formalize_all(&mut mm);
    let plan = edit(&root, &mut mm, MATH, None);
    assert_eq!(plan.paths(), vec![HELPERS, MAIN]);
    assert!(plan.tasks.iter().all(|t| t.reason == Reason::DependencyChanged));
    apply_plan(&mut mm, &plan, &ApplyOptions::default()).unwrap();
    assert_eq!(mm.entries[HELPERS].status, FormalizationStatus::ErrorDuringValidation);
    assert!(!mm.entries.contains_key(MATH));
}

#[test]
fn errored_dependency_degrades_to_opaque() {
    let (_d, root) = example();
    let mut mm = Metamodel::scan(&root).unwrap();
    formalize_all(&mut mm);
    let bad = "let add (a : int) (b : int) : int = a + true\n\nlet clamp (lo : int) (hi : int) (x : int) : int =\n  if x < lo then lo else if x > hi then hi else x\n";
    let plan = edit(&root, &mut mm, MATH, Some(bad));
    apply_plan(&mut mm, &plan, &ApplyOptions::default()).unwrap();
    assert_eq!(mm.entries[MATH].status, FormalizationStatus::ErrorDuringValidation);
    assert_eq!(mm.entries[HELPERS].status, FormalizationStatus::AdmittedWithOpaqueness);
    let opaque = &mm.entries[HELPERS].artifacts.as_ref().unwrap()["opaque"];
    assert!(opaque.as_array().unwrap().iter().any(|o| o == "clamp"), "{opaque}");
}

#[test]
fn stale_plan_is_rejected() {
    let (_d, root) = example();
    let mut mm = Metamodel::scan(&root).unwrap();
    let plan = plan_formalize(&mm, None).unwrap();
    formalize_all(&mut mm);
    assert!(matches!(apply_plan(&mut mm, &plan, &ApplyOptions::default()), Err(ProjectError::StalePlan { .. })));
}

#[test]
fn parse_error_keeps_last_good_state() {
    let (_d, root) = example();
    let mut mm = Metamodel::scan(&root).unwrap();
    formalize_all(&mut mm);
    let edges = mm.edges();
    let before = artifacts(&mm);
    let good = std::fs::read_to_string(root.join(HELPERS)).unwrap();
    let plan = edit(&root, &mut mm, HELPERS, Some("import utils.math_ops (add\nlet percent ="));
    apply_plan(&mut mm, &plan, &ApplyOptions::default()).unwrap();
    assert_eq!(plan.paths(), vec![HELPERS]);
    let e = &mm.entries[HELPERS];
    assert_eq!(e.status, FormalizationStatus::ErrorDuringValidation);
    assert!(e.last_good && e.artifacts.is_some());
    assert_eq!(mm.edges(), edges);
    for p in [MATH, ORDER, PRICING, MAIN] {
        assert_eq!(before[p], artifacts(&mm)[p]);
    }
    let plan = edit(&root, &mut mm, HELPERS, Some(&good));
    apply_plan(&mut mm, &plan, &ApplyOptions::default()).unwrap();
    assert_eq!(mm.entries[HELPERS].status, FormalizationStatus::AdmittedTransparent);
    assert_eq!(mm.edges(), edges);
    assert_eq!(before, artifacts(&mm));
}

#[test]
fn incremental_equals_batch() {
    let (_d, root) = example();
    let mut mm = Metamodel::scan(&root).unwrap();
    formalize_all(&mut mm);
    let math = std::fs::read_to_string(root.join(MATH)).unwrap().replace("a + b", "a + b + 0");
    let order = "type priority = Standard | Premium | Gold\ntype order = { amount : int; customer : priority }\n";
    let pricing = std::fs::read_to_string(root.join(PRICING))
        .unwrap()
        .replace("| Standard ->", "| Gold -> 30\n  | Standard ->");
    for (p, t) in [(MATH, math.as_str()), (ORDER, order), (PRICING, pricing.as_str())] {
        let plan = edit(&root, &mut mm, p, Some(t));
        apply_plan(&mut mm, &plan, &ApplyOptions::default()).unwrap();
    }
    std::fs::write(root.join("extra.mml"), "let one (x : int) : int = 1\n").unwrap();
    let evs = mm.detect_changes().unwrap();
    mm.refresh(&evs);
    let plan = plan_reformalization(&mm, &evs);
    apply_plan(&mut mm, &plan, &ApplyOptions::default()).unwrap();
    let mut batch = Metamodel::scan(&root).unwrap();
    formalize_all(&mut batch);
    assert_eq!(artifacts(&mm), artifacts(&batch));
    assert!(mm.entries.values().all(|e| e.status.is_admitted()));
}
