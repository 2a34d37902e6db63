//! Satisfiability for conjunctions of path constraints: a DPLL-style search
//! over the formula structure with theory checks for booleans, constructor
//! tests and linear arithmetic. Every model is verified before it is returned.

use super::arith::{self, ArithResult, Budget, Con, Rel};
use super::term::{AdtSig, Atom, CmpOp, Formula, LinExpr, NumKind};
use super::valuation::{eval_formula, Model, ModelValuation};
use crate::lang::module::Module;
use num_bigint::BigInt;
use num_rational::BigRational as Q;
use num_traits::{One, Signed, Zero};
use serde::Serialize;
use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

pub const DEFAULT_BUDGET: u64 = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum UnknownReason {
    Nonlinear,
    Budget,
    IncompleteTheory,
}

impl std::fmt::Display for UnknownReason {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            UnknownReason::Nonlinear => "nonlinear",
            UnknownReason::Budget => "budget",
            UnknownReason::IncompleteTheory => "incomplete-theory",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum SatResult {
    Sat(Model),
    Unsat,
    Unknown(UnknownReason),
}

impl SatResult {
    pub fn is_unsat(&self) -> bool {
        matches!(self, SatResult::Unsat)
    }
}

/// Splits conjunctions, drops `true`, deduplicates and sorts.
pub fn canonicalize(cs: &[Formula]) -> Vec<Formula> {
    let mut out = BTreeSet::new();
    let mut stack: Vec<Formula> = cs.to_vec();
    while let Some(f) = stack.pop() {
        match f {
            Formula::Const(true) => {}
            Formula::Const(false) => return vec![Formula::Const(false)],
            Formula::And(xs) => stack.extend(xs),
            other => {
                out.insert((other.class(), other));
            }
        }
    }
    out.into_iter().map(|(_, f)| f).collect()
}

#[derive(Debug, Clone, PartialEq)]
enum Lit {
    Bool(Atom, bool),
    Ctor(Atom, Arc<AdtSig>, usize, bool),
    Arith(CmpOp, NumKind, LinExpr),
}

#[derive(Debug, Clone, PartialEq)]
enum Nnf {
    Const(bool),
    Lit(Lit),
    And(Vec<Nnf>),
    Or(Vec<Nnf>),
}

fn nnf(f: &Formula, pos: bool) -> Nnf {
    match f {
        Formula::Const(b) => Nnf::Const(*b == pos),
        Formula::Var(a) => Nnf::Lit(Lit::Bool(a.clone(), pos)),
        Formula::IsCtor(a, sig, i) => Nnf::Lit(Lit::Ctor(a.clone(), sig.clone(), *i, pos)),
        Formula::Cmp(op, k, e) => {
            if pos {
                return Nnf::Lit(Lit::Arith(*op, *k, e.clone()));
            }
            match op {
                CmpOp::Eq => Nnf::Or(vec![
                    nnf(&Formula::cmp(CmpOp::Lt, *k, e.clone()), true),
                    nnf(&Formula::cmp(CmpOp::Lt, *k, e.neg()), true),
                ]),
                _ => nnf(&Formula::not(f.clone()), true),
            }
        }
        Formula::Not(x) => nnf(x, !pos),
        Formula::And(xs) | Formula::Or(xs) => {
            let items = xs.iter().map(|x| nnf(x, pos)).collect();
            if matches!(f, Formula::And(_)) == pos {
                Nnf::And(items)
            } else {
                Nnf::Or(items)
            }
        }
    }
}

#[derive(Clone, Default)]
struct State {
    bools: BTreeMap<Atom, bool>,
    ctor_pos: BTreeMap<Atom, usize>,
    ctor_neg: BTreeMap<Atom, BTreeSet<usize>>,
    sigs: BTreeMap<Atom, Arc<AdtSig>>,
    arith: Vec<(CmpOp, NumKind, LinExpr)>,
}

impl State {
    /// Adds a literal; `false` on an immediate conflict.
    fn add(&mut self, l: Lit) -> bool {
        match l {
            Lit::Bool(a, b) => match self.bools.get(&a) {
                Some(x) => *x == b,
                None => {
                    self.bools.insert(a, b);
                    true
                }
            },
            Lit::Ctor(a, sig, i, true) => {
                if let Some(p) = self.ctor_pos.get(&a) {
                    return *p == i;
                }
                if self.ctor_neg.get(&a).is_some_and(|n| n.contains(&i)) {
                    return false;
                }
                self.sigs.insert(a.clone(), sig);
                self.ctor_pos.insert(a, i);
                true
            }
            Lit::Ctor(a, sig, i, false) => {
                if let Some(p) = self.ctor_pos.get(&a) {
                    return *p != i;
                }
                let n = sig.ctors.len();
                self.sigs.insert(a.clone(), sig);
                let set = self.ctor_neg.entry(a).or_default();
                set.insert(i);
                set.len() < n
            }
            Lit::Arith(op, k, e) => {
                let l = (op, k, e);
                if !self.arith.contains(&l) {
                    self.arith.push(l);
                }
                true
            }
        }
    }

    fn lit_status(&self, l: &Lit) -> Option<bool> {
        match l {
            Lit::Bool(a, b) => self.bools.get(a).map(|x| x == b),
            Lit::Ctor(a, _, i, pos) => {
                let holds = match self.ctor_pos.get(a) {
                    Some(p) => Some(p == i),
                    None if self.ctor_neg.get(a).is_some_and(|n| n.contains(i)) => Some(false),
                    None => None,
                };
                holds.map(|h| h == *pos)
            }
            Lit::Arith(op, k, e) => {
                if self.arith.iter().any(|(o, kk, ee)| o == op && kk == k && ee == e) {
                    Some(true)
                } else {
                    None
                }
            }
        }
    }

    fn status(&self, n: &Nnf) -> Option<bool> {
        match n {
            Nnf::Const(b) => Some(*b),
            Nnf::Lit(l) => self.lit_status(l),
            Nnf::And(xs) => {
                let mut all = true;
                for x in xs {
                    match self.status(x) {
                        Some(false) => return Some(false),
                        None => all = false,
                        Some(true) => {}
                    }
                }
                all.then_some(true)
            }
            Nnf::Or(xs) => {
                let mut none = true;
                for x in xs {
                    match self.status(x) {
                        Some(true) => return Some(true),
                        None => none = false,
                        Some(false) => {}
                    }
                }
                none.then_some(false)
            }
        }
    }
}

enum Outcome {
    Sat(Model),
    Unsat,
    Unknown(UnknownReason),
}

struct Search<'a> {
    module: &'a Module,
    original: &'a [Formula],
    budget: Budget,
    nonlinear: bool,
}

struct ArithProblem {
    atoms: Vec<Atom>,
    is_int: Vec<bool>,
    cons: Vec<Con>,
}

fn arith_problem(lits: &[(CmpOp, NumKind, LinExpr)]) -> ArithProblem {
    let mut index: BTreeMap<Atom, usize> = BTreeMap::new();
    let mut kinds: BTreeMap<Atom, bool> = BTreeMap::new();
    for (_, k, e) in lits {
        for a in e.atoms() {
            let int = kinds.entry(a.clone()).or_insert(false);
            *int |= *k == NumKind::Int;
        }
    }
    let mut atoms = Vec::new();
    let mut is_int = Vec::new();
    for (a, int) in kinds {
        index.insert(a.clone(), atoms.len());
        atoms.push(a);
        is_int.push(int);
    }
    let cons = lits
        .iter()
        .map(|(op, _, e)| Con {
            c: e.terms.iter().map(|(a, q)| (index[a], q.clone())).collect(),
            k: e.constant.clone(),
            rel: match op {
                CmpOp::Le => Rel::Le,
                CmpOp::Lt => Rel::Lt,
                CmpOp::Eq => Rel::Eq,
            },
        })
        .collect();
    ArithProblem { atoms, is_int, cons }
}

enum Theory {
    Sat(Vec<Q>),
    Unsat,
    Unknown(UnknownReason),
}

impl Search<'_> {
    fn theory(&mut self, p: &ArithProblem, extra: Vec<Con>) -> Theory {
        if p.atoms.is_empty() && extra.is_empty() {
            return Theory::Sat(vec![]);
        }
        let mut cons = p.cons.clone();
        cons.extend(extra);
        match arith::solve(&p.is_int, cons, &mut self.budget) {
            Ok(ArithResult::Sat(v)) => Theory::Sat(v),
            Ok(ArithResult::Unsat) => Theory::Unsat,
            Ok(ArithResult::Unknown) => Theory::Unknown(UnknownReason::IncompleteTheory),
            Err(_) => Theory::Unknown(UnknownReason::Budget),
        }
    }

    fn model(&self, st: &State, p: &ArithProblem, vals: &[Q]) -> Model {
        let mut m = Model { bools: st.bools.clone(), ..Model::default() };
        for (a, v) in p.atoms.iter().zip(vals) {
            if !v.is_zero() {
                m.nums.insert(a.clone(), v.clone());
            }
        }
        for (a, sig) in &st.sigs {
            let i = match st.ctor_pos.get(a) {
                Some(i) => *i,
                None => {
                    let neg = st.ctor_neg.get(a).cloned().unwrap_or_default();
                    if !neg.contains(&sig.base) {
                        sig.base
                    } else {
                        (0..sig.ctors.len()).find(|i| !neg.contains(i)).unwrap_or(sig.base)
                    }
                }
            };
            if i != sig.base {
                m.ctors.insert(a.clone(), i);
            }
        }
        m
    }

    fn verified(&self, m: &Model) -> bool {
        let v = ModelValuation { model: m, module: self.module };
        self.original.iter().all(|f| eval_formula(f, &v) == Some(true))
    }

    /// Shrinks the largest integer magnitude by bisection on a box bound.
    fn minimize(&mut self, st: &State, p: &ArithProblem, vals: Vec<Q>) -> Vec<Q> {
        let ints: Vec<usize> = (0..p.atoms.len()).filter(|i| p.is_int[*i]).collect();
        let max = ints.iter().map(|i| vals[*i].abs().to_integer()).max().unwrap_or_default();
        if max.is_zero() {
            return vals;
        }
        let mut best = vals;
        let (mut lo, mut hi) = (BigInt::zero(), max);
        let mut rounds = 0;
        while lo < hi && rounds < 64 && self.budget.left > 1000 {
            rounds += 1;
            let mid: BigInt = (&lo + &hi) / 2;
            let mut extra = Vec::new();
            for i in &ints {
                let mq = Q::from_integer(mid.clone());
                extra.push(Con { c: [(*i, Q::one())].into_iter().collect(), k: -mq.clone(), rel: Rel::Le });
                extra.push(Con { c: [(*i, -Q::one())].into_iter().collect(), k: -mq, rel: Rel::Le });
            }
            match self.theory(p, extra) {
                Theory::Sat(v) => {
                    let m = self.model(st, p, &v);
                    if self.verified(&m) {
                        best = v;
                        hi = mid;
                    } else {
                        lo = mid + 1;
                    }
                }
                _ => lo = mid + 1,
            }
        }
        best
    }

    fn search(&mut self, mut st: State, mut todo: Vec<Nnf>, mut ors: Vec<Vec<Nnf>>) -> Outcome {
        if self.budget.tick(1).is_err() {
            return Outcome::Unknown(UnknownReason::Budget);
        }
        loop {
            while let Some(n) = todo.pop() {
                match n {
                    Nnf::Const(true) => {}
                    Nnf::Const(false) => return Outcome::Unsat,
                    Nnf::Lit(l) => {
                        if !st.add(l) {
                            return Outcome::Unsat;
                        }
                    }
                    Nnf::And(xs) => todo.extend(xs),
                    Nnf::Or(xs) => ors.push(xs),
                }
            }
            let mut kept = Vec::new();
            for xs in std::mem::take(&mut ors) {
                if xs.iter().any(|x| st.status(x) == Some(true)) {
                    continue;
                }
                let mut live: Vec<Nnf> = xs.into_iter().filter(|x| st.status(x) != Some(false)).collect();
                match live.len() {
                    0 => return Outcome::Unsat,
                    1 => todo.push(live.pop().unwrap()),
                    _ => kept.push(live),
                }
            }
            ors = kept;
            if todo.is_empty() {
                break;
            }
        }
        let p = arith_problem(&st.arith);
        let vals = match self.theory(&p, vec![]) {
            Theory::Unsat => return Outcome::Unsat,
            Theory::Unknown(r) if ors.is_empty() => return Outcome::Unknown(r),
            Theory::Unknown(_) => None,
            Theory::Sat(v) => Some(v),
        };
        if ors.is_empty() {
            let vals = vals.unwrap_or_default();
            let m = self.model(&st, &p, &vals);
            if !self.verified(&m) {
                let reason = if self.nonlinear { UnknownReason::Nonlinear } else { UnknownReason::IncompleteTheory };
                return Outcome::Unknown(reason);
            }
            let vals = self.minimize(&st, &p, vals);
            return Outcome::Sat(self.model(&st, &p, &vals));
        }
        let pick = (0..ors.len()).min_by_key(|i| (ors[*i].len(), *i)).unwrap();
        let branch = ors.remove(pick);
        let mut unknown = None;
        for d in branch {
            match self.search(st.clone(), vec![d], ors.clone()) {
                Outcome::Sat(m) => return Outcome::Sat(m),
                Outcome::Unsat => {}
                Outcome::Unknown(UnknownReason::Budget) => return Outcome::Unknown(UnknownReason::Budget),
                Outcome::Unknown(r) => unknown = Some(r),
            }
        }
        match unknown {
            Some(r) => Outcome::Unknown(r),
            None => Outcome::Unsat,
        }
    }
}

/// Decides a conjunction of constraints within `budget` search steps.
pub fn check_sat(module: &Module, cs: &[Formula], budget: u64) -> SatResult {
    let nonlinear = cs.iter().any(Formula::is_nonlinear);
    let mut s = Search { module, original: cs, budget: Budget { left: budget }, nonlinear };
    let todo = cs.iter().map(|f| nnf(f, true)).collect();
    match s.search(State::default(), todo, vec![]) {
        Outcome::Sat(m) => SatResult::Sat(m),
        Outcome::Unsat => SatResult::Unsat,
        Outcome::Unknown(r) => SatResult::Unknown(r),
    }
}
