use super::interp::eval_call;
use super::value::Value;
use crate::lang::module::Module;
use serde::Serialize;
use serde_json::{json, Map, Value as Json};

/// A named input binding for a function, replayable by the evaluator.
#[derive(Debug, Clone, PartialEq)]
pub struct Counterexample {
    pub target: String,
    pub binding: Vec<(String, Value)>,
    /// What produced the binding, e.g. `verify` or `instance`.
    pub provenance: String,
}

impl Counterexample {
    pub fn args(&self) -> Vec<Value> {
        self.binding.iter().map(|(_, v)| v.clone()).collect()
    }

    pub fn to_json(&self) -> Json {
        let mut b = Map::new();
        for (n, v) in &self.binding {
            b.insert(n.clone(), v.to_json());
        }
        json!({"target": self.target, "binding": Json::Object(b), "provenance": self.provenance})
    }

    /// Human-readable form, one `name = value` per parameter.
    pub fn pretty(&self) -> String {
        self.binding.iter().map(|(n, v)| format!("{n} = {v}")).collect::<Vec<_>>().join("\n")
    }

    /// Decodes a binding for `target`'s parameters from JSON.
    pub fn from_json(m: &Module, j: &Json) -> Result<Counterexample, String> {
        let target = j.get("target").and_then(Json::as_str).ok_or("missing `target`")?;
        let f = m.function(target).ok_or_else(|| format!("unknown function {target}"))?;
        let b = j.get("binding").and_then(Json::as_object).ok_or("missing object `binding`")?;
        let mut binding = Vec::new();
        for (p, t) in &f.params {
            let v = b.get(p).ok_or_else(|| format!("binding lacks parameter {p}"))?;
            binding.push((p.clone(), Value::from_json(m, t, v)?));
        }
        let provenance = j.get("provenance").and_then(Json::as_str).unwrap_or("external").to_string();
        Ok(Counterexample { target: target.to_string(), binding, provenance })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ReplaySemantics {
    /// A witness refutes a goal when the goal evaluates to false.
    Verify,
    /// A witness is an instance when the function evaluates to true.
    Instance,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ReplayReport {
    pub semantics: ReplaySemantics,
    pub result: Option<bool>,
    pub confirmed: bool,
    pub message: String,
}

pub fn replay_counterexample(m: &Module, vg: &str, cx: &Counterexample) -> ReplayReport {
    replay(m, vg, cx, ReplaySemantics::Verify)
}

pub fn replay(m: &Module, f: &str, cx: &Counterexample, semantics: ReplaySemantics) -> ReplayReport {
    match eval_call(m, f, &cx.args()) {
        Ok(Value::Bool(b)) => {
            let confirmed = match semantics {
                ReplaySemantics::Verify => !b,
                ReplaySemantics::Instance => b,
            };
            let message = match (semantics, confirmed) {
                (ReplaySemantics::Verify, true) => "goal evaluates to false: counterexample confirmed",
                (ReplaySemantics::Verify, false) => "goal evaluates to true: not a counterexample",
                (ReplaySemantics::Instance, true) => "function evaluates to true: instance confirmed",
                (ReplaySemantics::Instance, false) => "function evaluates to false: not an instance",
            };
            ReplayReport { semantics, result: Some(b), confirmed, message: message.into() }
        }
        Ok(other) => ReplayReport {
            semantics,
            result: None,
            confirmed: false,
            message: format!("witness not replayable: {f} returned non-boolean {other}"),
        },
        Err(e) => ReplayReport { semantics, result: None, confirmed: false, message: format!("witness not replayable: {e}") },
    }
}
