//! Property checks shared by the property tests and the acceptance report.
//! Each returns a one-line summary on success and the first violation on
//! failure.

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use regionforge_core::decomp::{decompose, matching_regions, DecompOptions, Invariant};
use regionforge_core::eval::{eval_call, replay, ReplaySemantics, Value};
use regionforge_core::lang::ast::{BinOp, CONS};
use regionforge_core::lang::{load, Module, Ty};
use regionforge_core::solver::*;
use regionforge_core::verify::{find_instance, verify_goal, InstanceResult, Verdict};
use regionforge_corpus::testkit::{enumerate_args, random_args, Domain};
use regionforge_corpus::{load_corpus, load_model, Expected};
use num_bigint::BigInt;
use num_rational::BigRational as Q;
use std::sync::Arc;

macro_rules! ensure {
    ($c:expr, $($fmt:tt)+) => {
        if !$c {
            return Err(format!($($fmt)+));
        }
    };
}

// ---------------------------------------------------------------------------
// Solver fuzz: random conjunctions over two ints, a bool, a three-constructor
// variant and an int list, checked against brute force over the small domain.

#[derive(Debug, Clone)]
enum Lit {
    /// `cx*x + cy*y + ch*hd(l) op k`
    Lin { cx: i64, cy: i64, ch: i64, op: BinOp, k: i64 },
    Bool(bool),
    Color(usize, bool),
    Cons(bool),
    /// Whether the tail is non-empty; only meaningful under `Cons(true)`.
    Long(bool),
    Or(Box<Lit>, Box<Lit>),
}

#[derive(Debug, Clone)]
struct Point {
    x: i64,
    y: i64,
    b: bool,
    c: usize,
    l: Vec<i64>,
}

impl Lit {
    fn needs_cons(&self) -> bool {
        match self {
            Lit::Lin { ch, .. } => *ch != 0,
            Lit::Long(_) => true,
            Lit::Or(a, b) => a.needs_cons() || b.needs_cons(),
            _ => false,
        }
    }

    fn holds(&self, p: &Point) -> bool {
        match self {
            Lit::Lin { cx, cy, ch, op, k } => {
                let hd = p.l.first().copied().unwrap_or(0);
                let v = cx * p.x + cy * p.y + ch * hd;
                match op {
                    BinOp::Lt => v < *k,
                    BinOp::Le => v <= *k,
                    BinOp::Gt => v > *k,
                    BinOp::Ge => v >= *k,
                    BinOp::Eq => v == *k,
                    _ => v != *k,
                }
            }
            Lit::Bool(pos) => p.b == *pos,
            Lit::Color(i, pos) => (p.c == *i) == *pos,
            Lit::Cons(pos) => !p.l.is_empty() == *pos,
            Lit::Long(pos) => (p.l.len() > 1) == *pos,
            Lit::Or(a, b) => a.holds(p) || b.holds(p),
        }
    }

    fn formula(&self, s: &Sigs) -> Formula {
        let l = Atom::Param("l".into());
        match self {
            Lit::Lin { cx, cy, ch, op, k } => {
                let term = |a: Atom, c: i64| LinExpr::atom(a).scale(&q(c));
                let lhs = term(Atom::Param("x".into()), *cx)
                    .add(&term(Atom::Param("y".into()), *cy))
                    .add(&term(l.slot(CONS, 0), *ch));
                Formula::num_rel(*op, NumKind::Int, &lhs, &LinExpr::constant(q(*k)))
            }
            Lit::Bool(pos) => sign(Formula::Var(Atom::Param("b".into())), *pos),
            Lit::Color(i, pos) => sign(Formula::IsCtor(Atom::Param("c".into()), s.color.clone(), *i), *pos),
            Lit::Cons(pos) => sign(Formula::IsCtor(l, s.list.clone(), 1), *pos),
            Lit::Long(pos) => sign(Formula::IsCtor(l.slot(CONS, 1), s.list.clone(), 1), *pos),
            Lit::Or(a, b) => Formula::or(vec![a.formula(s), b.formula(s)]),
        }
    }
}

struct Sigs {
    color: Arc<AdtSig>,
    list: Arc<AdtSig>,
    color_ty: Ty,
    list_ty: Ty,
}

fn q(n: i64) -> Q {
    Q::from_integer(BigInt::from(n))
}

fn sign(f: Formula, pos: bool) -> Formula {
    if pos {
        f
    } else {
        Formula::not(f)
    }
}

fn sig(m: &Module, ty: &Ty) -> Arc<AdtSig> {
    let cs = m.ctors_of(ty).unwrap();
    Arc::new(AdtSig {
        ty: ty.clone(),
        ctors: cs.iter().map(|c| c.name.clone()).collect(),
        arities: cs.iter().map(|c| c.fields.len()).collect(),
        base: m.base_ctor(ty),
    })
}

fn random_lit(rng: &mut StdRng, depth: usize) -> Lit {
    let ops = [BinOp::Lt, BinOp::Le, BinOp::Gt, BinOp::Ge, BinOp::Eq, BinOp::Neq];
    match rng.gen_range(0..if depth == 0 { 10 } else { 9 }) {
        0..=3 => Lit::Lin {
            cx: rng.gen_range(-3..=3),
            cy: if rng.gen_bool(0.6) { rng.gen_range(-3..=3) } else { 0 },
            ch: if rng.gen_bool(0.25) { rng.gen_range(-2..=2) } else { 0 },
            op: ops[rng.gen_range(0..ops.len())],
            k: rng.gen_range(-10..=10),
        },
        4 => Lit::Bool(rng.gen()),
        5 | 6 => Lit::Color(rng.gen_range(0..3), rng.gen()),
        7 => Lit::Cons(rng.gen()),
        8 => Lit::Long(rng.gen()),
        _ => Lit::Or(Box::new(random_lit(rng, depth + 1)), Box::new(random_lit(rng, depth + 1))),
    }
}

fn lists() -> Vec<Vec<i64>> {
    let mut out = vec![vec![]];
    for a in -8..=8 {
        out.push(vec![a]);
        for b in -8..=8 {
            out.push(vec![a, b]);
        }
    }
    out
}

fn brute_sat(lits: &[Lit], lists: &[Vec<i64>]) -> Option<Point> {
    for x in -8..=8 {
        for y in -8..=8 {
            for b in [false, true] {
                for c in 0..3 {
                    for l in lists {
                        let p = Point { x, y, b, c, l: l.clone() };
                        if lits.iter().all(|lit| lit.holds(&p)) {
                            return Some(p);
                        }
                    }
                }
            }
        }
    }
    None
}

fn model_point(model: &Model, s: &Sigs, m: &Module) -> Result<Point, String> {
    let int = |name: &str| {
        let v = model.nums.get(&Atom::Param(name.into())).cloned().unwrap_or_else(|| q(0));
        i64::try_from(v.to_integer()).unwrap_or(i64::MAX)
    };
    let c = match build_value(&Atom::Param("c".into()), &s.color_ty, model, m) {
        Some(Value::Variant(name, _)) => s.color.ctors.iter().position(|n| *n == name).unwrap(),
        other => return Err(format!("bad color {other:?}")),
    };
    let l = match build_value(&Atom::Param("l".into()), &s.list_ty, model, m) {
        Some(Value::List(vs)) => vs.iter().map(|v| i64::try_from(v.as_int().unwrap().clone()).unwrap()).collect(),
        other => return Err(format!("bad list {other:?}")),
    };
    Ok(Point { x: int("x"), y: int("y"), b: model.bools.get(&Atom::Param("b".into())).copied().unwrap_or(false), c, l })
}

pub fn solver_fuzz(cases: usize) -> Result<String, String> {
    let m = load("fuzz.mml", "type color = Red | Green | Blue\n").unwrap();
    let color_ty = Ty::Named("fuzz::color".into());
    let list_ty = Ty::list(Ty::Int);
    let s = Sigs { color: sig(&m, &color_ty), list: sig(&m, &list_ty), color_ty, list_ty };
    let lists = lists();
    let mut rng = StdRng::seed_from_u64(0x5eed);
    let (mut sat, mut unsat) = (0, 0);
    for i in 0..cases {
        let n = rng.gen_range(1..=5);
        let mut lits: Vec<Lit> = (0..n).map(|_| random_lit(&mut rng, 0)).collect();
        if lits.iter().any(Lit::needs_cons) {
            lits.push(Lit::Cons(true));
        }
        let fs: Vec<Formula> = lits.iter().map(|l| l.formula(&s)).collect();
        let brute = brute_sat(&lits, &lists);
        match check_sat(&m, &fs, DEFAULT_BUDGET) {
            SatResult::Sat(model) => {
                let p = model_point(&model, &s, &m)?;
                ensure!(lits.iter().all(|l| l.holds(&p)), "case {i}: model {p:?} violates {lits:?}");
                sat += 1;
            }
            SatResult::Unsat => {
                ensure!(brute.is_none(), "case {i}: unsat but {brute:?} satisfies {lits:?}");
                unsat += 1;
            }
            SatResult::Unknown(r) => return Err(format!("case {i}: unknown ({r}) on linear input {lits:?}")),
        }
    }
    ensure!(sat * 10 > cases && unsat * 10 > cases, "unbalanced fuzz: {sat} sat, {unsat} unsat");
    Ok(format!("{cases} conjunctions: {sat} sat, {unsat} unsat, all agree with brute force"))
}

// ---------------------------------------------------------------------------
// Decomposition: random inputs land in exactly one region whose prediction
// matches the evaluator.

pub fn classification(per_target: usize) -> Result<String, String> {
    let mut checked = 0;
    let mut rng = StdRng::seed_from_u64(7);
    let d = Domain::small();
    for entry in load_corpus() {
        let m = load_model(entry.id).unwrap();
        for target in &entry.targets {
            let r = decompose(&m, target, &DecompOptions::depth(entry.depth)).map_err(|e| e.to_string())?;
            for _ in 0..per_target {
                checked += 1;
                let args = random_args(&m, &r.params, &d, &mut rng);
                let hits = matching_regions(&m, &r, &args).map_err(|e| e.to_string())?;
                ensure!(hits.len() == 1, "{}::{target} on {args:?}: regions {hits:?}", entry.id);
                let region = r.region(&hits[0]).unwrap();
                let actual = eval_call(&m, target, &args).map_err(|e| e.to_string())?;
                if region.invariant == Invariant::Truncated {
                    continue;
                }
                let predicted = r.predicted_output(&m, &hits[0], &args);
                ensure!(
                    predicted.as_ref() == Some(&actual),
                    "{}::{target} on {args:?}: predicted {predicted:?}, got {actual}",
                    entry.id
                );
            }
        }
    }
    Ok(format!("{checked} random inputs each in exactly one region, outputs match"))
}

// ---------------------------------------------------------------------------
// Verdicts: counterexamples replay, and proofs agree with exhaustive sweeps of
// the small domain.

const SWEEP: usize = 20_000;

fn sweep_all_true(m: &Module, f: &str) -> Option<Vec<Value>> {
    let params = m.function(f).unwrap().params.clone();
    enumerate_args(m, &params, &Domain::small(), SWEEP)
        .into_iter()
        .find(|args| eval_call(m, f, args).ok().and_then(|v| v.as_bool()) == Some(false))
}

/// `shallow_netting` caps netting's bound at 3 where the deep run happens elsewhere.
pub fn verdict_soundness(shallow_netting: bool) -> Result<String, String> {
    let mut n = 0;
    for entry in load_corpus() {
        let depth = if shallow_netting && entry.id == "netting" { 3 } else { entry.depth };
        let m = load_model(entry.id).unwrap();
        let opts = DecompOptions::depth(depth);
        for e in &entry.expected {
            match e {
                Expected::Verdict { target, kind } => {
                    n += 1;
                    let v = verify_goal(&m, target, &opts).map_err(|e| e.to_string())?;
                    ensure!(v.kind() == *kind, "{}::{target}: {} (expected {kind})", entry.id, v.kind());
                    match &v {
                        Verdict::Refuted(cx) => {
                            let rep = replay(&m, target, cx, ReplaySemantics::Verify);
                            ensure!(rep.confirmed, "{}::{target}: {}", entry.id, rep.message);
                        }
                        Verdict::Proved | Verdict::ProvedUpToBound(_) if entry.id != "gtt" => {
                            let bad = sweep_all_true(&m, target);
                            ensure!(bad.is_none(), "{}::{target} proved but fails on {bad:?}", entry.id);
                        }
                        _ => {}
                    }
                }
                Expected::Instance { target, kind } => {
                    n += 1;
                    let r = find_instance(&m, target, &opts).map_err(|e| e.to_string())?;
                    ensure!(r.kind() == *kind, "{}::{target}: {} (expected {kind})", entry.id, r.kind());
                    match &r {
                        InstanceResult::Witness(cx) => {
                            let rep = replay(&m, target, cx, ReplaySemantics::Instance);
                            ensure!(rep.confirmed, "{}::{target}: {}", entry.id, rep.message);
                        }
                        InstanceResult::NoInstanceUpToBound(_) => {
                            let params = m.function(target).unwrap().params.clone();
                            let hit = enumerate_args(&m, &params, &Domain::small(), SWEEP)
                                .into_iter()
                                .find(|a| eval_call(&m, target, a).ok().and_then(|v| v.as_bool()) == Some(true));
                            ensure!(hit.is_none(), "{}::{target} has instance {hit:?}", entry.id);
                        }
                        InstanceResult::Unknown { .. } => return Err(format!("{}::{target} unknown", entry.id)),
                    }
                }
                Expected::Regions { .. } => {}
            }
        }
    }
    Ok(format!("{n} verdicts: counterexamples replay, proofs hold on sweeps"))
}

// ---------------------------------------------------------------------------
// Determinism: identical inputs give byte-identical JSON, also across freshly
// loaded modules.

pub fn determinism() -> Result<String, String> {
    let mut n = 0;
    for entry in load_corpus() {
        for e in &entry.expected {
            let Expected::Regions { target, count } = e else { continue };
            let opts = DecompOptions::depth(entry.depth);
            n += 1;
            let run = || decompose(&load_model(entry.id).unwrap(), target, &opts).map_err(|e| e.to_string());
            let (a, b) = (run()?, run()?);
            ensure!(a.regions.len() == *count, "{}::{target}: {} regions", entry.id, a.regions.len());
            let ja = serde_json::to_string(&a.to_json()).unwrap();
            let jb = serde_json::to_string(&b.to_json()).unwrap();
            ensure!(ja == jb, "{}::{target}: JSON differs between runs", entry.id);
            let ids: Vec<&str> = a.regions.iter().map(|r| r.id.as_str()).collect();
            let mut sorted = ids.clone();
            sorted.sort();
            ensure!(ids == sorted, "{}::{target}: regions not sorted by id", entry.id);
        }
    }
    Ok(format!("{n} decompositions byte-identical across runs"))
}
