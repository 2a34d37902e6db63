//! Corpus models, fixtures and the example project, plus value generators
//! used by the property and acceptance suites.

pub mod testkit;

use regionforge_core::lang::{load, LoadError, Module};
use std::path::PathBuf;
use std::sync::Arc;

pub fn root() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
}

pub fn model_path(name: &str) -> PathBuf {
    root().join("models").join(format!("{name}.mml"))
}

pub fn fixture_path(name: &str) -> PathBuf {
    root().join("fixtures").join(name)
}

pub fn example_project() -> PathBuf {
    root().join("projects").join("example")
}

pub fn source(name: &str) -> String {
    let p = model_path(name);
    std::fs::read_to_string(&p).unwrap_or_else(|e| panic!("cannot read {}: {e}", p.display()))
}

pub fn load_model(name: &str) -> Result<Arc<Module>, LoadError> {
    load(&format!("{name}.mml"), &source(name))
}

/// What a corpus entry is expected to produce.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Expected {
    Regions { target: &'static str, count: usize },
    Verdict { target: &'static str, kind: &'static str },
    Instance { target: &'static str, kind: &'static str },
}

#[derive(Debug, Clone)]
pub struct CorpusEntry {
    pub id: &'static str,
    pub path: PathBuf,
    /// Unroll depth the expectations hold at.
    pub depth: usize,
    pub expected: Vec<Expected>,
    /// Functions whose inputs are sampled by the decomposition property suite.
    pub targets: Vec<&'static str>,
}

pub fn load_corpus() -> Vec<CorpusEntry> {
    use Expected::*;
    let entry = |id: &'static str, depth, expected, targets| CorpusEntry { id, path: model_path(id), depth, expected, targets };
    vec![
        entry(
            "discount",
            8,
            vec![Regions { target: "discount", count: 4 }, Instance { target: "big_premium", kind: "witness" }],
            vec!["discount", "big_premium"],
        ),
        entry(
            "ordering",
            8,
            vec![
                Verdict { target: "lt_transitive", kind: "proved" },
                Verdict { target: "le_antisymmetric", kind: "proved" },
                Verdict { target: "lt_total_wrong", kind: "refuted" },
                Instance { target: "in_window", kind: "witness" },
                Instance { target: "irreflexive", kind: "no-instance-up-to-bound" },
                Regions { target: "rank", count: 3 },
            ],
            vec!["rank", "lt_transitive", "in_window"],
        ),
        entry(
            "rng",
            8,
            vec![Regions { target: "roll_bonus", count: 3 }, Verdict { target: "roll_in_range", kind: "proved" }],
            vec![],
        ),
        entry(
            "netting",
            4,
            vec![
                Verdict { target: "efficiency", kind: "refuted" },
                Verdict { target: "zero_sum", kind: "proved-up-to-bound" },
            ],
            vec!["efficiency"],
        ),
        entry("gtt", 2, vec![Verdict { target: "no_conflict", kind: "refuted" }], vec![]),
    ]
}
