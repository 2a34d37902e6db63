use crate::metamodel::{FormalizationStatus, Metamodel};
use crate::plan::Plan;
use crate::ProjectError;
use regionforge_core::decomp::{decompose, DecompOptions, DEFAULT_UNROLL_DEPTH};
use regionforge_core::lang::ast::DirectiveKind;
use regionforge_core::lang::{admit, admit_signatures, AdmissionStatus, DependencyContext, Module};
use regionforge_core::util::sha256_hex;
use regionforge_core::verify::{find_instance, verify_goal};
use serde_json::{json, Value as Json};
use std::sync::Arc;

#[derive(Debug, Clone)]
pub struct ApplyOptions {
    /// Unroll depth for the directives of each model.
    pub depth: usize,
    /// When false only admission runs; directive artifacts stay empty.
    pub run_directives: bool,
}

impl Default for ApplyOptions {
    fn default() -> Self {
        ApplyOptions { depth: DEFAULT_UNROLL_DEPTH, run_directives: true }
    }
}

pub(crate) struct Context {
    pub hash: String,
    pub modules: Vec<Arc<Module>>,
}

/// The dependency context of `path`: admitted modules of its imports, or
/// the declared signatures (all functions opaque) of imports that are not
/// admitted.
pub(crate) fn context_for(mm: &Metamodel, path: &str) -> Context {
    let mut lines = vec![];
    let mut modules = vec![];
    let Some(e) = mm.entries.get(path) else {
        return Context { hash: sha256_hex(b""), modules };
    };
    for d in &e.deps {
        let Some(de) = mm.entries.get(d) else {
            lines.push(format!("{d} missing"));
            continue;
        };
        if de.in_cycle() {
            lines.push(format!("{d} cycle"));
            continue;
        }
        match (&de.admitted, &de.program) {
            (Some(m), _) => {
                lines.push(format!("{d} {:?} {}", de.formal_status, m.hash));
                modules.push(m.clone());
            }
            (None, Some(p)) => {
                let inner = context_for(mm, d);
                let sig = admit_signatures(p, &DependencyContext::new(inner.modules));
                lines.push(format!("{d} signatures {}", sig.hash));
                modules.push(Arc::new(sig));
            }
            (None, None) => lines.push(format!("{d} unavailable")),
        }
    }
    Context { hash: sha256_hex(lines.join("\n").as_bytes()), modules }
}

fn run_directives(m: &Module, opts: &ApplyOptions) -> Vec<Json> {
    m.directives
        .iter()
        .map(|d| {
            let o = DecompOptions { side_condition: d.assuming.clone(), basis: d.basis.clone(), ..DecompOptions::depth(opts.depth) };
            let result = match d.kind {
                DirectiveKind::Verify => verify_goal(m, &d.target, &o).map(|v| v.to_json()),
                DirectiveKind::Instance => find_instance(m, &d.target, &o).map(|v| v.to_json()),
                DirectiveKind::Decompose => decompose(m, &d.target, &o).map(|r| r.to_json()),
            };
            let result = result.unwrap_or_else(|e| json!({"error": e.to_string()}));
            json!({"kind": d.kind, "target": d.target, "result": result})
        })
        .collect()
}

fn formalize(mm: &mut Metamodel, path: &str, opts: &ApplyOptions) {
    let Some(e) = mm.entries.get(path) else { return };
    if !e.parses() {
        // Keep the last good model and artifacts; the entry already reports
        // the parse error.
        return;
    }
    let ctx = context_for(mm, path);
    let e = &mm.entries[path];
    let (status, diagnostics, opaque, admitted) = if let Some(c) = &e.cycle {
        (FormalizationStatus::ErrorDuringValidation, vec![c.clone()], vec![], None)
    } else {
        let program = e.program.as_ref().expect("parsed entry has a program");
        let report = admit(program, &DependencyContext::new(ctx.modules));
        let status = match report.status {
            AdmissionStatus::AdmittedTransparent => FormalizationStatus::AdmittedTransparent,
            AdmissionStatus::AdmittedWithOpaqueness => FormalizationStatus::AdmittedWithOpaqueness,
            AdmissionStatus::ErrorDuringValidation => FormalizationStatus::ErrorDuringValidation,
        };
        let diags = report.diagnostics.iter().map(|d| d.to_string()).collect();
        (status, diags, report.opaque, report.admitted)
    };
    let directives = match &admitted {
        Some(m) if opts.run_directives => run_directives(m, opts),
        _ => vec![],
    };
    let artifacts = json!({
        "module": e.module,
        "source": e.src_hash,
        "module_hash": admitted.as_ref().map(|m| m.hash.clone()),
        "status": status,
        "diagnostics": diagnostics,
        "opaque": opaque,
        "directives": directives,
    });
    let text = serde_json::to_string(&artifacts).expect("artifacts serialize");
    let e = mm.entries.get_mut(path).expect("entry exists");
    e.formal_status = status;
    e.formal_diagnostics = diagnostics;
    e.admitted = admitted;
    e.formalized_src_hash = Some(e.src_hash.clone());
    e.dependency_context = Some(ctx.hash);
    e.artifact_hash = Some(sha256_hex(text.as_bytes()));
    e.artifacts = Some(artifacts);
    e.refresh_status();
}

/// Runs each task in order: admission against the dependency context, then
/// the model's directives, caching the results. Failures are recorded on
/// the entry and never abort the plan.
pub fn apply_plan(mm: &mut Metamodel, plan: &Plan, opts: &ApplyOptions) -> Result<(), ProjectError> {
    let current = mm.hash();
    if plan.base != current {
        return Err(ProjectError::StalePlan { planned: plan.base.clone(), current });
    }
    for t in &plan.tasks {
        log::info!("formalizing {} ({:?})", t.path, t.reason);
        formalize(mm, &t.path, opts);
    }
    Ok(())
}
