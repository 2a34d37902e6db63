//! Region decomposition: partitions a function's input space into regions
//! characterized by path constraints, each with an invariant result and a
//! sample point.

mod engine;

pub use engine::Stats;
pub(crate) use engine::{Engine, Out, Path};

use crate::eval::Value;
use crate::lang::ast::Ty;
use crate::lang::module::Module;
use crate::solver::{
    build_value, canonicalize, check_sat, eval_formula, eval_sval, Atom, Formula, InputValuation, SVal, SatResult,
    DEFAULT_BUDGET,
};
use crate::util::sha256_hex;
use serde::Serialize;
use serde_json::{json, Map, Value as Json};
use std::collections::{BTreeMap, BTreeSet};

pub const SCHEMA_VERSION: u32 = 1;
pub const DEFAULT_UNROLL_DEPTH: usize = 8;
pub const DEFAULT_MAX_PATHS: usize = 50_000;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecompOptions {
    pub unroll_depth: usize,
    pub side_condition: Option<String>,
    pub basis: Vec<String>,
    pub budget: u64,
    /// Cap on explored paths. Past it the engine stops forking and the
    /// result is marked incomplete.
    pub max_paths: usize,
}

impl Default for DecompOptions {
    fn default() -> Self {
        DecompOptions {
            unroll_depth: DEFAULT_UNROLL_DEPTH,
            side_condition: None,
            basis: vec![],
            budget: DEFAULT_BUDGET,
            max_paths: DEFAULT_MAX_PATHS,
        }
    }
}

impl DecompOptions {
    pub fn depth(d: usize) -> Self {
        DecompOptions { unroll_depth: d, ..Self::default() }
    }
}

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum DecompError {
    #[error("unknown function {0}")]
    UnknownFunction(String),
    #[error("{0} is opaque and has no body to decompose")]
    OpaqueTarget(String),
    #[error("side condition {0} must take the target's parameters and return bool")]
    SideCondition(String),
    #[error("basis function {0} is not declared")]
    UnknownBasis(String),
    #[error("{0} does not return bool")]
    NotBoolean(String),
    #[error("region constraints mention opaque function {0}; classification is undefined")]
    OpaqueConstraint(String),
    #[error("wrong arguments for {0}: expected {1} values of the parameter types")]
    Arguments(String, usize),
}

#[derive(Debug, Clone, PartialEq)]
pub enum Invariant {
    Value(Value),
    Symbolic(String),
    Truncated,
}

impl std::fmt::Display for Invariant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Invariant::Value(v) => write!(f, "{v}"),
            Invariant::Symbolic(s) => write!(f, "{s}"),
            Invariant::Truncated => write!(f, "<truncated at unroll bound>"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum RegionStatus {
    Complete,
    BoundExhausted,
}

#[derive(Debug, Clone)]
pub struct Region {
    pub id: String,
    pub constraints: Vec<Formula>,
    pub invariant: Invariant,
    pub sample: Option<Vec<(String, Value)>>,
    /// Why no sample is attached, when there is none.
    pub sample_note: Option<String>,
    pub executable: bool,
    pub status: RegionStatus,
    pub(crate) assumptions: Vec<Formula>,
    pub(crate) result: Option<SVal>,
}

impl Region {
    pub fn constraint_strings(&self) -> Vec<String> {
        self.constraints.iter().map(|c| c.to_string()).collect()
    }
}

#[derive(Debug, Clone)]
pub struct DecompResult {
    pub target: String,
    pub module_hash: String,
    pub options: DecompOptions,
    pub params: Vec<(String, Ty)>,
    pub regions: Vec<Region>,
    pub exhaustive: bool,
    pub stats: Stats,
}

fn resolve(m: &Module, name: &str) -> Result<String, DecompError> {
    m.function(name).map(|f| f.qname.clone()).ok_or_else(|| DecompError::UnknownFunction(name.to_string()))
}

pub(crate) fn is_opaque_fn(m: &Module) -> impl Fn(&str) -> bool + '_ {
    |f: &str| m.functions.get(f).is_none_or(|i| i.is_opaque())
}

/// First opaque function mentioned by the formulas or value, if any.
pub(crate) fn opaque_mention(m: &Module, fs: &[Formula], v: Option<&SVal>) -> Option<String> {
    let mut found = None;
    let mut check = |a: &Atom| {
        if found.is_none() {
            collect_opaque(m, a, &mut found);
        }
    };
    for f in fs {
        f.for_each_atom(&mut check);
    }
    if let Some(v) = v {
        v.for_each_atom(&mut check);
    }
    found
}

fn collect_opaque(m: &Module, a: &Atom, found: &mut Option<String>) {
    match a {
        Atom::Param(_) => {}
        Atom::Field(x, _) | Atom::Elem(x, _) | Atom::Slot(x, _, _) => collect_opaque(m, x, found),
        Atom::App(f, args) => {
            if is_opaque_fn(m)(f) {
                *found = Some(crate::lang::ast::bare(f).to_string());
                return;
            }
            for v in args {
                v.for_each_atom(&mut |x| collect_opaque(m, x, found));
            }
        }
        Atom::Arith(_, _, x, y) => {
            for z in x.atoms().chain(y.atoms()) {
                collect_opaque(m, z, found);
            }
        }
    }
}

/// Symbolically executes `f` and collects one region per feasible path.
pub fn decompose(m: &Module, f: &str, opts: &DecompOptions) -> Result<DecompResult, DecompError> {
    let info = m.function(f).ok_or_else(|| DecompError::UnknownFunction(f.to_string()))?;
    if info.is_opaque() {
        return Err(DecompError::OpaqueTarget(f.to_string()));
    }
    let qname = info.qname.clone();
    let mut basis = BTreeSet::new();
    for b in &opts.basis {
        basis.insert(m.function(b).map(|i| i.qname.clone()).ok_or_else(|| DecompError::UnknownBasis(b.clone()))?);
    }
    let side = match &opts.side_condition {
        Some(s) => {
            let q = resolve(m, s)?;
            let si = &m.functions[&q];
            let same = si.params.len() == info.params.len()
                && si.params.iter().zip(&info.params).all(|(a, b)| a.1 == b.1)
                && si.ret == Ty::Bool;
            if !same || si.is_opaque() {
                return Err(DecompError::SideCondition(s.clone()));
            }
            Some(q)
        }
        None => None,
    };
    let mut eng = Engine::new(m, opts.unroll_depth, basis, opts.budget);
    eng.max_paths = opts.max_paths;
    let inputs: Vec<SVal> = info.params.iter().map(|(n, t)| eng.input(Atom::Param(n.clone()), t)).collect();
    let mut starts = vec![Path::default()];
    let mut exhaustive = true;
    if let Some(s) = &side {
        starts.clear();
        for o in eng.inline(s, inputs.clone(), Path::default()) {
            match o {
                Out::Val(SVal::Bool(phi), p) => {
                    if let Some(p) = eng.assume(p, phi) {
                        starts.push(p);
                    }
                }
                Out::Val(..) => unreachable!("side condition is boolean"),
                Out::Trunc(_) => exhaustive = false,
            }
        }
    }
    let mut outs = Vec::new();
    for p in starts {
        outs.extend(eng.inline(&qname, inputs.clone(), p));
    }
    eng.stats.paths = outs.len();
    if eng.stats.path_budget_exhausted {
        exhaustive = false;
    }
    let mut regions: BTreeMap<String, Region> = BTreeMap::new();
    for o in outs {
        let (result, p, status) = match o {
            Out::Val(v, p) => (Some(v), p, RegionStatus::Complete),
            Out::Trunc(p) => (None, p, RegionStatus::BoundExhausted),
        };
        if p.unknown || status == RegionStatus::BoundExhausted {
            exhaustive = false;
        }
        let r = make_region(m, info, &eng, result, p, status);
        regions.entry(r.id.clone()).or_insert(r);
    }
    Ok(DecompResult {
        target: info.name.clone(),
        module_hash: m.hash.clone(),
        options: opts.clone(),
        params: info.params.clone(),
        regions: regions.into_values().collect(),
        exhaustive,
        stats: eng.stats,
    })
}

fn make_region(
    m: &Module,
    info: &crate::lang::module::FunInfo,
    eng: &Engine,
    result: Option<SVal>,
    p: Path,
    status: RegionStatus,
) -> Region {
    let constraints = canonicalize(&p.cons);
    let invariant = match &result {
        None => Invariant::Truncated,
        Some(v) if v.is_ground() => {
            let empty = InputValuation::new(m, BTreeMap::new());
            match eval_sval(v, &empty) {
                Some(x) => Invariant::Value(x),
                None => Invariant::Symbolic(v.to_string()),
            }
        }
        Some(v) => Invariant::Symbolic(v.to_string()),
    };
    let text = constraints.iter().map(|c| c.to_string()).collect::<Vec<_>>().join("\n");
    let id = sha256_hex(format!("{text}\u{0}{invariant}").as_bytes())[..16].to_string();
    let executable = opaque_mention(m, &constraints, result.as_ref()).is_none();
    let mut all = constraints.clone();
    all.extend(p.assumptions.iter().cloned());
    let (sample, sample_note) = match check_sat(m, &all, eng.budget) {
        SatResult::Sat(model) => {
            let binding: Option<Vec<(String, Value)>> = info
                .params
                .iter()
                .map(|(n, t)| build_value(&Atom::Param(n.clone()), t, &model, m).map(|v| (n.clone(), v)))
                .collect();
            match binding {
                Some(b) if !executable || realizable(m, &constraints, &b) => (Some(b), None),
                Some(_) => (None, Some("solver model is not realizable by the concrete semantics".to_string())),
                None => (None, Some("could not build input values from the model".to_string())),
            }
        }
        SatResult::Unsat => (None, Some("constraints are unsatisfiable".to_string())),
        SatResult::Unknown(r) => (None, Some(format!("solver returned unknown ({r})"))),
    };
    Region { id, constraints, invariant, sample, sample_note, executable, status, assumptions: p.assumptions, result }
}

fn realizable(m: &Module, cs: &[Formula], binding: &[(String, Value)]) -> bool {
    let v = InputValuation::new(m, binding.iter().cloned().collect());
    cs.iter().all(|c| eval_formula(c, &v) == Some(true))
}

/// Ids of every region whose constraints hold for `args`.
pub fn matching_regions(m: &Module, result: &DecompResult, args: &[Value]) -> Result<Vec<String>, DecompError> {
    if args.len() != result.params.len() || args.iter().zip(&result.params).any(|(v, (_, t))| !v.has_type(m, t)) {
        return Err(DecompError::Arguments(result.target.clone(), result.params.len()));
    }
    let binding: BTreeMap<String, Value> =
        result.params.iter().map(|(n, _)| n.clone()).zip(args.iter().cloned()).collect();
    let v = InputValuation::new(m, binding);
    let mut out = Vec::new();
    for r in &result.regions {
        if let Some(f) = opaque_mention(m, &r.constraints, None) {
            return Err(DecompError::OpaqueConstraint(f));
        }
        if r.constraints.iter().all(|c| eval_formula(c, &v) == Some(true)) {
            out.push(r.id.clone());
        }
    }
    Ok(out)
}

/// The region containing `args`, or `None` when no region does.
pub fn classify_input(m: &Module, result: &DecompResult, args: &[Value]) -> Result<Option<String>, DecompError> {
    Ok(matching_regions(m, result, args)?.into_iter().next())
}

fn binding_json(b: &[(String, Value)]) -> Json {
    let mut o = Map::new();
    for (n, v) in b {
        o.insert(n.clone(), v.to_json());
    }
    Json::Object(o)
}

impl DecompResult {
    pub fn region(&self, id: &str) -> Option<&Region> {
        self.regions.iter().find(|r| r.id == id)
    }

    /// The output region `id` predicts for `args`: its symbolic result
    /// evaluated at the inputs. `None` for truncated regions or when the
    /// result cannot be evaluated.
    pub fn predicted_output(&self, m: &Module, id: &str, args: &[Value]) -> Option<Value> {
        let r = self.region(id)?;
        if let Invariant::Value(v) = &r.invariant {
            return Some(v.clone());
        }
        let binding = self.params.iter().map(|(n, _)| n.clone()).zip(args.iter().cloned()).collect();
        eval_sval(r.result.as_ref()?, &InputValuation::new(m, binding))
    }

    pub fn to_json(&self) -> Json {
        let regions: Vec<Json> = self
            .regions
            .iter()
            .map(|r| {
                let invariant = match &r.invariant {
                    Invariant::Value(v) => json!({"kind": "value", "text": v.to_string(), "value": v.to_json()}),
                    Invariant::Symbolic(s) => json!({"kind": "symbolic", "text": s}),
                    Invariant::Truncated => json!({"kind": "truncated", "text": r.invariant.to_string()}),
                };
                json!({
                    "id": r.id,
                    "status": r.status,
                    "constraints": r.constraint_strings(),
                    "invariant": invariant,
                    "sample": r.sample.as_ref().map(|b| binding_json(b)),
                    "sample_note": r.sample_note,
                    "executable": r.executable,
                })
            })
            .collect();
        json!({
            "schema_version": SCHEMA_VERSION,
            "target": self.target,
            "module_hash": self.module_hash,
            "options": self.options,
            "exhaustive": self.exhaustive,
            "stats": self.stats,
            "regions": regions,
        })
    }
}
