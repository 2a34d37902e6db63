//! Incremental formalization of a project directory of MML files.
//!
//! A [`Metamodel`] mirrors the directory: one entry per `.mml` file, the
//! import graph, and the cached artifacts of the last formalization. Plans
//! name the minimal set of entries to re-formalize after a change, in
//! dependency order.

mod apply;
mod metamodel;
mod plan;
pub mod serve;

pub use apply::{apply_plan, ApplyOptions};
pub use metamodel::{module_path, ChangeEvent, FormalizationStatus, Metamodel, ModelEntry};
pub use plan::{plan_formalize, plan_reformalization, Plan, Reason, Task};

use std::path::PathBuf;

#[derive(Debug, thiserror::Error)]
pub enum ProjectError {
    #[error("cannot read project root {path}: {source}")]
    Root { path: PathBuf, source: std::io::Error },
    #[error("stale plan: planned against metamodel {planned}, current is {current}")]
    StalePlan { planned: String, current: String },
    #[error("unknown model {0}")]
    UnknownModel(String),
    #[error("{0}")]
    Io(#[from] std::io::Error),
    #[error("socket {path}: {source}")]
    Socket { path: PathBuf, source: std::io::Error },
    #[error("watcher: {0}")]
    Watch(#[from] notify::Error),
}
