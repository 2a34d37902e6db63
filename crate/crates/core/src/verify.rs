//! Verification goals and instance search on top of region decomposition.

use crate::decomp::{decompose, opaque_mention, DecompError, DecompOptions, RegionStatus};
use crate::eval::{replay, Counterexample, ReplaySemantics, Value};
use crate::lang::ast::Ty;
use crate::lang::module::Module;
use crate::solver::{build_value, check_sat, Atom, Formula, Model, SVal, SatResult, UnknownReason};
use serde_json::{json, Value as Json};

#[derive(Debug, Clone, PartialEq)]
pub enum Verdict {
    Proved,
    ProvedUpToBound(usize),
    Refuted(Counterexample),
    Unknown { reason: String, candidate: Option<Counterexample> },
}

#[derive(Debug, Clone, PartialEq)]
pub enum InstanceResult {
    Witness(Counterexample),
    NoInstanceUpToBound(usize),
    Unknown { reason: String, candidate: Option<Counterexample> },
}

fn cx_json(c: &Option<Counterexample>) -> Json {
    c.as_ref().map(|c| c.to_json()).unwrap_or(Json::Null)
}

impl Verdict {
    pub fn kind(&self) -> &'static str {
        match self {
            Verdict::Proved => "proved",
            Verdict::ProvedUpToBound(_) => "proved-up-to-bound",
            Verdict::Refuted(_) => "refuted",
            Verdict::Unknown { .. } => "unknown",
        }
    }

    pub fn to_json(&self) -> Json {
        match self {
            Verdict::Proved => json!({"schema_version": 1, "verdict": self.kind()}),
            Verdict::ProvedUpToBound(d) => json!({"schema_version": 1, "verdict": self.kind(), "bound": d}),
            Verdict::Refuted(c) => json!({"schema_version": 1, "verdict": self.kind(), "counterexample": c.to_json()}),
            Verdict::Unknown { reason, candidate } => {
                json!({"schema_version": 1, "verdict": self.kind(), "reason": reason, "candidate": cx_json(candidate)})
            }
        }
    }
}

impl InstanceResult {
    pub fn kind(&self) -> &'static str {
        match self {
            InstanceResult::Witness(_) => "witness",
            InstanceResult::NoInstanceUpToBound(_) => "no-instance-up-to-bound",
            InstanceResult::Unknown { .. } => "unknown",
        }
    }

    pub fn to_json(&self) -> Json {
        match self {
            InstanceResult::Witness(c) => json!({"schema_version": 1, "result": self.kind(), "witness": c.to_json()}),
            InstanceResult::NoInstanceUpToBound(d) => json!({"schema_version": 1, "result": self.kind(), "bound": d}),
            InstanceResult::Unknown { reason, candidate } => {
                json!({"schema_version": 1, "result": self.kind(), "reason": reason, "candidate": cx_json(candidate)})
            }
        }
    }
}

enum Search {
    Found(Counterexample),
    NotFound { bounded: bool, unknown: Option<String>, candidate: Option<Counterexample> },
}

fn binding(m: &Module, params: &[(String, Ty)], model: &Model) -> Option<Vec<(String, Value)>> {
    params.iter().map(|(n, t)| build_value(&Atom::Param(n.clone()), t, model, m).map(|v| (n.clone(), v))).collect()
}

/// Looks for a region input where the boolean result equals `want`.
fn search(m: &Module, f: &str, opts: &DecompOptions, want: bool) -> Result<Search, DecompError> {
    let info = m.function(f).ok_or_else(|| DecompError::UnknownFunction(f.to_string()))?;
    if info.ret != Ty::Bool {
        return Err(DecompError::NotBoolean(f.to_string()));
    }
    let res = decompose(m, f, opts)?;
    let (semantics, provenance) =
        if want { (ReplaySemantics::Instance, "instance") } else { (ReplaySemantics::Verify, "verify") };
    let mut bounded = !res.exhaustive;
    let mut unknown = None;
    let mut candidate = None;
    for r in &res.regions {
        let Some(SVal::Bool(phi)) = &r.result else {
            debug_assert_eq!(r.status, RegionStatus::BoundExhausted);
            continue;
        };
        let goal = if want { phi.clone() } else { Formula::not(phi.clone()) };
        if goal.as_const() == Some(false) {
            continue;
        }
        let mut cs = r.constraints.clone();
        cs.extend(r.assumptions.iter().cloned());
        cs.push(goal);
        match check_sat(m, &cs, opts.budget) {
            SatResult::Unsat => {}
            SatResult::Unknown(reason) => {
                unknown.get_or_insert_with(|| format!("solver returned unknown ({reason})"));
            }
            SatResult::Sat(model) => {
                let Some(b) = binding(m, &info.params, &model) else {
                    unknown.get_or_insert_with(|| "could not build input values from the model".to_string());
                    continue;
                };
                let cx = Counterexample { target: info.name.clone(), binding: b, provenance: provenance.into() };
                if let Some(op) = opaque_mention(m, &cs, None) {
                    unknown.get_or_insert_with(|| format!("candidate depends on opaque function {op}; holds only modulo assumptions"));
                    candidate.get_or_insert(cx);
                    continue;
                }
                let rep = replay(m, &info.qname, &cx, semantics);
                if rep.confirmed {
                    return Ok(Search::Found(cx));
                }
                unknown.get_or_insert_with(|| format!("candidate did not replay: {}", rep.message));
                candidate.get_or_insert(cx);
            }
        }
    }
    if res.stats.path_budget_exhausted {
        unknown.get_or_insert_with(|| format!("path budget of {} exhausted", opts.max_paths));
    }
    if res.stats.solver_unknowns > 0 {
        unknown.get_or_insert_with(|| format!("solver returned unknown ({}) on a path", UnknownReason::IncompleteTheory));
    }
    bounded |= res.regions.iter().any(|r| r.status == RegionStatus::BoundExhausted);
    Ok(Search::NotFound { bounded, unknown, candidate })
}

/// Proves or refutes `vg` for all inputs, within the unroll bound.
pub fn verify_goal(m: &Module, vg: &str, opts: &DecompOptions) -> Result<Verdict, DecompError> {
    Ok(match search(m, vg, opts, false)? {
        Search::Found(cx) => Verdict::Refuted(cx),
        Search::NotFound { unknown: Some(reason), candidate, .. } => Verdict::Unknown { reason, candidate },
        Search::NotFound { bounded: true, .. } => Verdict::ProvedUpToBound(opts.unroll_depth),
        Search::NotFound { .. } => Verdict::Proved,
    })
}

/// Searches for an input on which `f` returns true.
pub fn find_instance(m: &Module, f: &str, opts: &DecompOptions) -> Result<InstanceResult, DecompError> {
    Ok(match search(m, f, opts, true)? {
        Search::Found(cx) => InstanceResult::Witness(cx),
        Search::NotFound { unknown: Some(reason), candidate, .. } => InstanceResult::Unknown { reason, candidate },
        Search::NotFound { .. } => InstanceResult::NoInstanceUpToBound(opts.unroll_depth),
    })
}
