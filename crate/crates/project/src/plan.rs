use crate::apply::context_for;
use crate::metamodel::{ChangeEvent, Metamodel};
use crate::ProjectError;
use serde::Serialize;
use serde_json::{json, Value as Json};
use std::collections::{BTreeMap, BTreeSet};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Reason {
    NeverFormalized,
    SourceChanged,
    DependencyChanged,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Task {
    pub path: String,
    pub reason: Reason,
}

/// Re-formalization tasks in dependency order, bound to the metamodel state
/// they were computed from.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Plan {
    pub base: String,
    pub tasks: Vec<Task>,
    pub warnings: Vec<String>,
}

impl Plan {
    pub fn is_empty(&self) -> bool {
        self.tasks.is_empty()
    }

    pub fn paths(&self) -> Vec<&str> {
        self.tasks.iter().map(|t| t.path.as_str()).collect()
    }

    pub fn to_json(&self) -> Json {
        json!({"schema_version": 1, "base": self.base, "tasks": self.tasks, "warnings": self.warnings})
    }
}

fn ordered(mm: &Metamodel, tasks: BTreeMap<String, Reason>, warnings: Vec<String>) -> Plan {
    let keys: BTreeSet<String> = tasks.keys().cloned().collect();
    let tasks = mm.topo_order(&keys).into_iter().map(|p| Task { reason: tasks[&p], path: p }).collect();
    Plan { base: mm.hash(), tasks, warnings }
}

/// Minimal plan after `changes`, which must already be reflected in `mm`
/// (see [`Metamodel::refresh`]).
///
/// Only models that were formalized before, newly created models, and
/// unformalized dependencies those tasks need are scheduled. Editing a
/// model nobody has formalized schedules nothing.
pub fn plan_reformalization(mm: &Metamodel, changes: &[ChangeEvent]) -> Plan {
    let mut tasks: BTreeMap<String, Reason> = BTreeMap::new();
    let mut origins: Vec<String> = vec![];
    let mut warnings = vec![];
    for ev in changes {
        let p = ev.path().to_string();
        match (ev, mm.entries.get(&p)) {
            (ChangeEvent::Deleted(_), Some(_)) => warnings.push(format!("{p} was reported deleted but still exists")),
            (ChangeEvent::Deleted(_), None) => origins.push(p),
            (_, None) => warnings.push(format!("ignoring change to unknown model {p}")),
            (_, Some(e)) if !e.is_formalized() => {
                if matches!(ev, ChangeEvent::Created(_)) {
                    tasks.insert(p.clone(), Reason::NeverFormalized);
                    origins.push(p);
                }
            }
            (_, Some(e)) => {
                if e.formalized_src_hash.as_deref() != Some(e.src_hash.as_str()) {
                    tasks.insert(p.clone(), Reason::SourceChanged);
                    // A file that no longer parses keeps serving its last good
                    // model, so its dependents are left alone.
                    if e.parses() {
                        origins.push(p);
                    }
                }
            }
        }
    }
    for o in &origins {
        for q in mm.dependents(o) {
            if mm.entries[&q].is_formalized() {
                tasks.entry(q).or_insert(Reason::DependencyChanged);
            }
        }
    }
    let planned: Vec<String> = tasks.keys().cloned().collect();
    for t in planned {
        for d in mm.dependencies(&t) {
            if !mm.entries[&d].is_formalized() {
                tasks.entry(d).or_insert(Reason::NeverFormalized);
            }
        }
    }
    ordered(mm, tasks, warnings)
}

/// Plan that brings `target` and its dependencies (or every model) up to
/// date. Entries that are already current are skipped.
pub fn plan_formalize(mm: &Metamodel, target: Option<&str>) -> Result<Plan, ProjectError> {
    let scope: BTreeSet<String> = match target {
        None => mm.entries.keys().cloned().collect(),
        Some(t) => {
            if !mm.entries.contains_key(t) {
                return Err(ProjectError::UnknownModel(t.to_string()));
            }
            let mut s = mm.dependencies(t);
            s.insert(t.to_string());
            s
        }
    };
    let mut tasks: BTreeMap<String, Reason> = BTreeMap::new();
    for p in mm.topo_order(&scope) {
        let e = &mm.entries[&p];
        let reason = if !e.is_formalized() {
            Some(Reason::NeverFormalized)
        } else if e.formalized_src_hash.as_deref() != Some(e.src_hash.as_str()) {
            Some(Reason::SourceChanged)
        } else if e.deps.iter().any(|d| tasks.contains_key(d) && mm.entries[d].parses())
            || e.parses() && context_for(mm, &p).hash != e.dependency_context.clone().unwrap_or_default()
        {
            Some(Reason::DependencyChanged)
        } else {
            None
        };
        if let Some(r) = reason {
            tasks.insert(p, r);
        }
    }
    Ok(ordered(mm, tasks, vec![]))
}
