use crate::ProjectError;
use petgraph::algo::tarjan_scc;
use petgraph::graph::{DiGraph, NodeIndex};
use regionforge_core::lang::admit::module_name;
use regionforge_core::lang::{parse, Module, Program};
use regionforge_core::util::sha256_hex;
use serde::Serialize;
use serde_json::{json, Value as Json};
use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::path::{Path, PathBuf};
use std::sync::Arc;

pub const STATUS_DIR: &str = ".regionforge";
pub const STATUS_FILE: &str = "status.json";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub enum FormalizationStatus {
    Unknown,
    ErrorDuringValidation,
    AdmittedWithOpaqueness,
    AdmittedTransparent,
}

impl FormalizationStatus {
    pub fn is_admitted(self) -> bool {
        matches!(self, FormalizationStatus::AdmittedWithOpaqueness | FormalizationStatus::AdmittedTransparent)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", content = "path", rename_all = "lowercase")]
pub enum ChangeEvent {
    Created(String),
    Modified(String),
    Deleted(String),
}

impl ChangeEvent {
    pub fn path(&self) -> &str {
        match self {
            ChangeEvent::Created(p) | ChangeEvent::Modified(p) | ChangeEvent::Deleted(p) => p,
        }
    }
}

/// `utils.math_ops` lives at `utils/math_ops.mml`.
pub fn module_path(module: &str) -> String {
    format!("{}.mml", module.replace('.', "/"))
}

#[derive(Debug, Clone, Serialize)]
pub struct ModelEntry {
    pub path: String,
    pub module: String,
    pub src_hash: String,
    /// Paths this model imports. After a parse failure these are the edges of
    /// the last version that parsed.
    pub deps: BTreeSet<String>,
    pub status: FormalizationStatus,
    pub diagnostics: Vec<String>,
    /// Source hash and dependency-context hash at the last formalization.
    pub formalized_src_hash: Option<String>,
    pub dependency_context: Option<String>,
    pub artifacts: Option<Json>,
    pub artifact_hash: Option<String>,
    /// True when the cached artifacts belong to an older source than the
    /// current one (the current source failed to parse).
    pub last_good: bool,
    #[serde(skip)]
    pub(crate) formal_status: FormalizationStatus,
    #[serde(skip)]
    pub(crate) formal_diagnostics: Vec<String>,
    #[serde(skip)]
    pub(crate) parse_error: Option<String>,
    #[serde(skip)]
    pub(crate) cycle: Option<String>,
    #[serde(skip)]
    pub(crate) program: Option<Program>,
    #[serde(skip)]
    pub(crate) admitted: Option<Arc<Module>>,
}

impl ModelEntry {
    fn new(path: &str, source: &str) -> ModelEntry {
        let mut e = ModelEntry {
            path: path.to_string(),
            module: module_name(path),
            src_hash: String::new(),
            deps: BTreeSet::new(),
            status: FormalizationStatus::Unknown,
            diagnostics: vec![],
            formalized_src_hash: None,
            dependency_context: None,
            artifacts: None,
            artifact_hash: None,
            last_good: false,
            formal_status: FormalizationStatus::Unknown,
            formal_diagnostics: vec![],
            parse_error: None,
            cycle: None,
            program: None,
            admitted: None,
        };
        e.set_source(source);
        e
    }

    fn set_source(&mut self, source: &str) {
        self.src_hash = sha256_hex(source.as_bytes());
        match parse(&self.path, source) {
            Ok(p) => {
                self.deps = p.imports().map(|i| module_path(&i.module)).collect();
                self.program = Some(p);
                self.parse_error = None;
            }
            Err(e) => self.parse_error = Some(e.to_string()),
        }
        self.refresh_status();
    }

    pub(crate) fn refresh_status(&mut self) {
        let (status, diags) = if let Some(e) = &self.parse_error {
            (FormalizationStatus::ErrorDuringValidation, vec![e.clone()])
        } else if let Some(c) = &self.cycle {
            (FormalizationStatus::ErrorDuringValidation, vec![c.clone()])
        } else {
            (self.formal_status, self.formal_diagnostics.clone())
        };
        self.status = status;
        self.diagnostics = diags;
        self.last_good = self.parse_error.is_some() && self.artifacts.is_some();
    }

    pub fn is_formalized(&self) -> bool {
        self.formalized_src_hash.is_some()
    }

    pub fn parses(&self) -> bool {
        self.parse_error.is_none()
    }

    pub fn in_cycle(&self) -> bool {
        self.cycle.is_some()
    }

    /// The admitted module of the last successful formalization.
    pub fn admitted(&self) -> Option<&Arc<Module>> {
        self.admitted.as_ref()
    }
}

#[derive(Debug, Clone)]
pub struct Metamodel {
    pub root: PathBuf,
    pub entries: BTreeMap<String, ModelEntry>,
}

fn rel_path(root: &Path, p: &Path) -> Option<String> {
    let rel = p.strip_prefix(root).ok()?;
    if rel.extension().and_then(|e| e.to_str()) != Some("mml") {
        return None;
    }
    let parts: Vec<String> = rel.components().map(|c| c.as_os_str().to_string_lossy().into_owned()).collect();
    if parts.iter().any(|p| p.starts_with('.')) {
        return None;
    }
    Some(parts.join("/"))
}

impl Metamodel {
    pub fn empty(root: &Path) -> Metamodel {
        Metamodel { root: root.to_path_buf(), entries: BTreeMap::new() }
    }

    /// Reads every `.mml` file under `root`. Unreadable or unparsable files
    /// become errored entries; they never abort the scan.
    pub fn scan(root: &Path) -> Result<Metamodel, ProjectError> {
        let mut mm = Metamodel::empty(root);
        for (path, source) in read_tree(root)? {
            mm.entries.insert(path.clone(), ModelEntry::new(&path, &source));
        }
        mm.rebuild_graph();
        Ok(mm)
    }

    /// In-memory update of one file: `None` deletes it.
    pub fn set_source(&mut self, path: &str, source: Option<&str>) {
        match source {
            None => {
                self.entries.remove(path);
            }
            Some(s) => match self.entries.get_mut(path) {
                Some(e) => e.set_source(s),
                None => {
                    self.entries.insert(path.to_string(), ModelEntry::new(path, s));
                }
            },
        }
        self.rebuild_graph();
    }

    /// Re-reads the files named by `events` from disk. Returns warnings for
    /// paths that are not models under the root.
    pub fn refresh(&mut self, events: &[ChangeEvent]) -> Vec<String> {
        let mut warnings = vec![];
        for ev in events {
            let p = ev.path();
            if rel_path(&self.root, &self.root.join(p)).as_deref() != Some(p) {
                warnings.push(format!("ignoring {p}: not a model under the project root"));
                continue;
            }
            match std::fs::read_to_string(self.root.join(p)) {
                Ok(s) => self.set_source(p, Some(&s)),
                Err(_) => self.set_source(p, None),
            }
        }
        warnings
    }

    /// Compares the tree on disk with the metamodel.
    pub fn detect_changes(&self) -> Result<Vec<ChangeEvent>, ProjectError> {
        let disk = read_tree(&self.root)?;
        let mut out = vec![];
        for (p, s) in &disk {
            match self.entries.get(p) {
                None => out.push(ChangeEvent::Created(p.clone())),
                Some(e) if e.src_hash != sha256_hex(s.as_bytes()) => out.push(ChangeEvent::Modified(p.clone())),
                Some(_) => {}
            }
        }
        for p in self.entries.keys() {
            if !disk.contains_key(p) {
                out.push(ChangeEvent::Deleted(p.clone()));
            }
        }
        Ok(out)
    }

    /// Classifies a changed filesystem path against the current entries.
    pub fn classify(&self, abs: &Path) -> Option<ChangeEvent> {
        let rel = rel_path(&self.root, abs)?;
        let on_disk = std::fs::read_to_string(abs).ok();
        match (self.entries.get(&rel), on_disk) {
            (None, Some(_)) => Some(ChangeEvent::Created(rel)),
            (Some(e), Some(s)) if e.src_hash != sha256_hex(s.as_bytes()) => Some(ChangeEvent::Modified(rel)),
            (Some(_), None) => Some(ChangeEvent::Deleted(rel)),
            _ => None,
        }
    }

    fn rebuild_graph(&mut self) {
        let (g, _) = self.graph();
        let mut cycles: HashMap<String, String> = HashMap::new();
        for scc in tarjan_scc(&g) {
            let self_loop = scc.len() == 1 && g.contains_edge(scc[0], scc[0]);
            if scc.len() > 1 || self_loop {
                let mut names: Vec<&str> = scc.iter().map(|n| g[*n].as_str()).collect();
                names.sort();
                let msg = format!("import cycle: {}", names.join(" -> "));
                for n in names {
                    cycles.insert(n.to_string(), msg.clone());
                }
            }
        }
        for (p, e) in self.entries.iter_mut() {
            e.cycle = cycles.get(p).cloned();
            e.refresh_status();
        }
    }

    /// The import graph over existing entries; an edge points from importer
    /// to imported.
    pub fn graph(&self) -> (DiGraph<String, ()>, BTreeMap<String, NodeIndex>) {
        let mut g = DiGraph::new();
        let mut idx = BTreeMap::new();
        for p in self.entries.keys() {
            idx.insert(p.clone(), g.add_node(p.clone()));
        }
        for (p, e) in &self.entries {
            for d in &e.deps {
                if let Some(&t) = idx.get(d) {
                    g.add_edge(idx[p], t, ());
                }
            }
        }
        (g, idx)
    }

    pub fn edges(&self) -> Vec<(String, String)> {
        let mut out = vec![];
        for (p, e) in &self.entries {
            for d in &e.deps {
                if self.entries.contains_key(d) {
                    out.push((p.clone(), d.clone()));
                }
            }
        }
        out
    }

    /// Existing entries that import `path`, directly or transitively.
    pub fn dependents(&self, path: &str) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        let mut stack = vec![path.to_string()];
        while let Some(p) = stack.pop() {
            for (q, e) in &self.entries {
                if e.deps.contains(&p) && out.insert(q.clone()) {
                    stack.push(q.clone());
                }
            }
        }
        out.remove(path);
        out
    }

    /// Existing entries that `path` imports, directly or transitively.
    pub fn dependencies(&self, path: &str) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        let mut stack = vec![path.to_string()];
        while let Some(p) = stack.pop() {
            let Some(e) = self.entries.get(&p) else { continue };
            for d in &e.deps {
                if self.entries.contains_key(d) && out.insert(d.clone()) {
                    stack.push(d.clone());
                }
            }
        }
        out.remove(path);
        out
    }

    /// Dependencies-first order of `subset`; ties break by path. Members of
    /// import cycles come last.
    pub fn topo_order(&self, subset: &BTreeSet<String>) -> Vec<String> {
        let mut indeg: BTreeMap<&str, usize> = subset.iter().map(|p| (p.as_str(), 0)).collect();
        for p in subset {
            if let Some(e) = self.entries.get(p) {
                let n = e.deps.iter().filter(|d| subset.contains(*d) && *d != p).count();
                indeg.insert(p, n);
            }
        }
        let mut ready: BTreeSet<&str> = indeg.iter().filter(|(_, n)| **n == 0).map(|(p, _)| *p).collect();
        let mut out = vec![];
        while let Some(p) = ready.pop_first() {
            out.push(p.to_string());
            indeg.remove(p);
            for (q, n) in indeg.iter_mut() {
                if self.entries.get(*q).is_some_and(|e| e.deps.contains(p)) {
                    *n -= 1;
                    if *n == 0 {
                        ready.insert(q);
                    }
                }
            }
        }
        out.extend(indeg.keys().map(|p| p.to_string()));
        out
    }

    /// Digest of every entry's observable state; plans are checked against it.
    pub fn hash(&self) -> String {
        let mut s = String::new();
        for (p, e) in &self.entries {
            s.push_str(&format!(
                "{p}\0{}\0{:?}\0{}\0{}\0{}\n",
                e.src_hash,
                e.status,
                e.formalized_src_hash.as_deref().unwrap_or("-"),
                e.dependency_context.as_deref().unwrap_or("-"),
                e.artifact_hash.as_deref().unwrap_or("-"),
            ));
        }
        sha256_hex(s.as_bytes())[..16].to_string()
    }

    pub fn status_json(&self) -> Json {
        let entries: Vec<Json> = self
            .entries
            .values()
            .map(|e| {
                json!({
                    "path": e.path,
                    "module": e.module,
                    "status": e.status,
                    "src_hash": e.src_hash,
                    "deps": e.deps,
                    "dependency_context": e.dependency_context,
                    "artifact_hash": e.artifact_hash,
                    "last_good": e.last_good,
                    "diagnostics": e.diagnostics,
                })
            })
            .collect();
        let edges: Vec<Json> = self.edges().into_iter().map(|(a, b)| json!([a, b])).collect();
        json!({"schema_version": 1, "metamodel": self.hash(), "entries": entries, "edges": edges})
    }

    pub fn status_path(&self) -> PathBuf {
        self.root.join(STATUS_DIR).join(STATUS_FILE)
    }

    /// Writes the status file atomically (write to a temporary, then rename).
    pub fn write_status(&self) -> Result<(), ProjectError> {
        let path = self.status_path();
        std::fs::create_dir_all(path.parent().expect("status path has a parent"))?;
        let tmp = path.with_extension("json.tmp");
        let text = serde_json::to_string_pretty(&self.status_json()).expect("status serializes");
        std::fs::write(&tmp, text)?;
        std::fs::rename(&tmp, &path)?;
        Ok(())
    }
}

fn read_tree(root: &Path) -> Result<BTreeMap<String, String>, ProjectError> {
    std::fs::read_dir(root).map_err(|source| ProjectError::Root { path: root.to_path_buf(), source })?;
    let mut out = BTreeMap::new();
    let walker = walkdir::WalkDir::new(root)
        .sort_by_file_name()
        .into_iter()
        .filter_entry(|d| d.depth() == 0 || !d.file_name().to_string_lossy().starts_with('.'));
    for d in walker.flatten() {
        if !d.file_type().is_file() {
            continue;
        }
        let Some(rel) = rel_path(root, d.path()) else { continue };
        match std::fs::read_to_string(d.path()) {
            Ok(s) => {
                out.insert(rel, s);
            }
            Err(e) => log::warn!("skipping unreadable {}: {e}", d.path().display()),
        }
    }
    Ok(out)
}
