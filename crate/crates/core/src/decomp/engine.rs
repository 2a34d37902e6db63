//! Symbolic evaluator. Walks the typed IR, forking the path condition at
//! every feasible branch and inlining calls up to the unroll bound.

use crate::lang::ast::{BinOp, Ty, UnOp};
use crate::lang::module::{FunInfo, Module, TExpr, TKind, TPattern};
use crate::solver::{
    check_sat, eval_formula, AdtSig, ArithOp, Atom, Formula, LinExpr, Model, ModelValuation, NumKind, SVal, SatResult, FALSE,
    TRUE,
};
use num_rational::BigRational as Q;
use num_traits::{One, Zero};
use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

#[derive(Debug, Clone, Default)]
pub(crate) struct Path {
    pub cons: Vec<Formula>,
    /// Axiom instances: used for feasibility, not reported as constraints.
    pub assumptions: Vec<Formula>,
    frames: BTreeMap<String, usize>,
    instantiated: BTreeSet<Atom>,
    pub unknown: bool,
    /// A model of the constraints so far, reused to skip solver calls.
    model: Option<Arc<Model>>,
}

pub(crate) enum Out<T> {
    Val(T, Path),
    /// The path hit the unroll bound.
    Trunc(Path),
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, serde::Serialize)]
pub struct Stats {
    pub paths: usize,
    pub pruned: usize,
    pub solver_unknowns: usize,
    pub solver_calls: usize,
    /// Forking stopped at the path cap; some inputs are in no region.
    pub path_budget_exhausted: bool,
}

pub(crate) struct Engine<'m> {
    pub m: &'m Module,
    pub depth: usize,
    pub basis: BTreeSet<String>,
    pub budget: u64,
    pub max_paths: usize,
    pub stats: Stats,
    forks: usize,
    sigs: BTreeMap<Ty, Arc<AdtSig>>,
}

type Env = Vec<(String, SVal)>;

pub(crate) fn num_kind(ty: &Ty) -> NumKind {
    if *ty == Ty::Rat {
        NumKind::Rat
    } else {
        NumKind::Int
    }
}

fn as_bool(v: SVal) -> Formula {
    match v {
        SVal::Bool(f) => f,
        other => unreachable!("expected a boolean, got {other}"),
    }
}

fn as_num(v: SVal) -> (NumKind, LinExpr) {
    match v {
        SVal::Num(k, e) => (k, e),
        other => unreachable!("expected a number, got {other}"),
    }
}

impl<'m> Engine<'m> {
    pub fn new(m: &'m Module, depth: usize, basis: BTreeSet<String>, budget: u64) -> Self {
        Engine {
            m,
            depth,
            basis,
            budget,
            max_paths: usize::MAX,
            stats: Stats::default(),
            forks: 0,
            sigs: BTreeMap::new(),
        }
    }

    pub fn sig(&mut self, ty: &Ty) -> Arc<AdtSig> {
        if let Some(s) = self.sigs.get(ty) {
            return s.clone();
        }
        let ctors = self.m.ctors_of(ty).expect("variant or list type");
        let sig = Arc::new(AdtSig {
            ty: ty.clone(),
            ctors: ctors.iter().map(|c| c.name.clone()).collect(),
            arities: ctors.iter().map(|c| c.fields.len()).collect(),
            base: self.m.base_ctor(ty),
        });
        self.sigs.insert(ty.clone(), sig.clone());
        sig
    }

    /// The symbolic value of an input atom of type `ty`, expanded through
    /// records and tuples.
    pub fn input(&self, a: Atom, ty: &Ty) -> SVal {
        match ty {
            Ty::Int => SVal::Num(NumKind::Int, LinExpr::atom(a)),
            Ty::Rat => SVal::Num(NumKind::Rat, LinExpr::atom(a)),
            Ty::Bool => SVal::Bool(Formula::Var(a)),
            Ty::Tuple(ts) => SVal::Tuple(ts.iter().enumerate().map(|(i, t)| self.input(a.elem(i), t)).collect()),
            Ty::Named(q) => match self.m.record_fields(ty) {
                Some(fs) => SVal::Record(
                    q.clone(),
                    fs.iter().map(|(n, t)| (n.clone(), self.input(a.field(n), t))).collect(),
                ),
                None => SVal::Adt(a, ty.clone()),
            },
            Ty::List(_) => SVal::Adt(a, ty.clone()),
        }
    }

    fn solve(&mut self, p: &Path, extra: &Formula) -> SatResult {
        let mut cs = p.cons.clone();
        cs.extend(p.assumptions.iter().cloned());
        cs.push(extra.clone());
        self.stats.solver_calls += 1;
        check_sat(self.m, &cs, self.budget)
    }

    /// Splits `p` on `f`. A side whose negation is infeasible inherits `p`
    /// unchanged, so implied facts never appear as constraints.
    pub fn branch(&mut self, p: Path, f: &Formula) -> (Option<Path>, Option<Path>) {
        match f.as_const() {
            Some(true) => return (Some(p), None),
            Some(false) => return (None, Some(p)),
            None => {}
        }
        let nf = Formula::not(f.clone());
        let cached = p.model.as_ref().and_then(|m| eval_formula(f, &ModelValuation { model: m, module: self.m }));
        let reuse = |m: &Option<Arc<Model>>| SatResult::Sat(m.as_deref().cloned().unwrap_or_default());
        let yes = if cached == Some(true) { reuse(&p.model) } else { self.solve(&p, f) };
        let no = if cached == Some(false) { reuse(&p.model) } else { self.solve(&p, &nf) };
        let extend = |r: &SatResult, g: &Formula, stats: &mut Stats| -> Option<Path> {
            match r {
                SatResult::Unsat => {
                    stats.pruned += 1;
                    None
                }
                SatResult::Sat(m) => {
                    let mut q = p.clone();
                    q.cons.push(g.clone());
                    q.model = Some(Arc::new(m.clone()));
                    Some(q)
                }
                SatResult::Unknown(_) => {
                    stats.solver_unknowns += 1;
                    let mut q = p.clone();
                    q.cons.push(g.clone());
                    q.unknown = true;
                    q.model = None;
                    Some(q)
                }
            }
        };
        match (yes.is_unsat(), no.is_unsat()) {
            (true, true) => {
                self.stats.pruned += 2;
                (None, None)
            }
            (true, false) => {
                self.stats.pruned += 1;
                (None, Some(p))
            }
            (false, true) => {
                self.stats.pruned += 1;
                (Some(p), None)
            }
            (false, false) => {
                self.forks += 1;
                if self.forks >= self.max_paths {
                    // Keep following one side so open paths still finish.
                    self.stats.path_budget_exhausted = true;
                    return (extend(&yes, f, &mut self.stats), None);
                }
                let a = extend(&yes, f, &mut self.stats);
                let b = extend(&no, &nf, &mut self.stats);
                (a, b)
            }
        }
    }

    /// Adds `f` to the path if feasible.
    pub fn assume(&mut self, p: Path, f: Formula) -> Option<Path> {
        self.branch(p, &f).0
    }

    pub fn eval(&mut self, e: &'m TExpr, env: &Env, p: Path) -> Vec<Out<SVal>> {
        match &e.kind {
            TKind::Int(n) => vec![Out::Val(SVal::Num(NumKind::Int, LinExpr::constant(Q::from_integer(n.clone()))), p)],
            TKind::Rat(q) => vec![Out::Val(SVal::Num(NumKind::Rat, LinExpr::constant(q.clone())), p)],
            TKind::Bool(b) => vec![Out::Val(SVal::Bool(Formula::Const(*b)), p)],
            TKind::Var(x) => {
                let v = env.iter().rev().find(|(n, _)| n == x).map(|(_, v)| v.clone());
                vec![Out::Val(v.unwrap_or_else(|| panic!("unbound variable {x} after admission")), p)]
            }
            TKind::Unary(op, x) => self.map(x, env, p, |v| match op {
                UnOp::Neg => {
                    let (k, e) = as_num(v);
                    SVal::Num(k, e.neg())
                }
                UnOp::Not => SVal::Bool(Formula::not(as_bool(v))),
            }),
            TKind::Binary(op @ (BinOp::And | BinOp::Or | BinOp::Implies), a, b) => self.logical(*op, a, b, env, p),
            TKind::Binary(op, a, b) => {
                let mut out = Vec::new();
                for o in self.eval_seq(&[a, b], env, p) {
                    match o {
                        Out::Trunc(q) => out.push(Out::Trunc(q)),
                        Out::Val(mut vs, q) => {
                            let y = vs.pop().unwrap();
                            let x = vs.pop().unwrap();
                            match op {
                                BinOp::Eq | BinOp::Neq => {
                                    for r in self.equal(&x, &y, q, self.depth + 1) {
                                        out.push(match r {
                                            Out::Val(f, q) if *op == BinOp::Neq => Out::Val(SVal::Bool(Formula::not(f)), q),
                                            Out::Val(f, q) => Out::Val(SVal::Bool(f), q),
                                            Out::Trunc(q) => Out::Trunc(q),
                                        });
                                    }
                                }
                                _ => out.push(Out::Val(self.binary(*op, x, y, &a.ty), q)),
                            }
                        }
                    }
                }
                out
            }
            TKind::If(c, t, f) => {
                let mut out = Vec::new();
                for o in self.eval(c, env, p) {
                    match o {
                        Out::Trunc(q) => out.push(Out::Trunc(q)),
                        Out::Val(v, q) => {
                            let cond = as_bool(v);
                            let (yes, no) = self.branch(q, &cond);
                            if let Some(q) = yes {
                                out.extend(self.eval(t, env, q));
                            }
                            if let Some(q) = no {
                                out.extend(self.eval(f, env, q));
                            }
                        }
                    }
                }
                out
            }
            TKind::Let(x, bound, body) => {
                let mut out = Vec::new();
                for o in self.eval(bound, env, p) {
                    match o {
                        Out::Trunc(q) => out.push(Out::Trunc(q)),
                        Out::Val(v, q) => {
                            let mut env2 = env.clone();
                            env2.push((x.clone(), v));
                            out.extend(self.eval(body, &env2, q));
                        }
                    }
                }
                out
            }
            TKind::Match(s, arms) => {
                let mut out = Vec::new();
                for o in self.eval(s, env, p) {
                    match o {
                        Out::Trunc(q) => out.push(Out::Trunc(q)),
                        Out::Val(v, q) => {
                            let arm_ctors: Vec<Option<usize>> = arms
                                .iter()
                                .map(|a| match &a.pattern {
                                    TPattern::Ctor(i, _) => Some(*i),
                                    _ => None,
                                })
                                .collect();
                            for (k, cv, q) in self.select(v, &s.ty, &arm_ctors, q) {
                                let arm = &arms[k];
                                let mut env2 = env.clone();
                                match (&arm.pattern, &cv) {
                                    (TPattern::Ctor(_, bs), SVal::Ctor(_, _, _, xs)) => {
                                        for (b, x) in bs.iter().zip(xs) {
                                            if let Some(b) = b {
                                                env2.push((b.clone(), x.clone()));
                                            }
                                        }
                                    }
                                    (TPattern::Tuple(bs), SVal::Tuple(xs)) => {
                                        for (b, x) in bs.iter().zip(xs) {
                                            if let Some(b) = b {
                                                env2.push((b.clone(), x.clone()));
                                            }
                                        }
                                    }
                                    _ => {}
                                }
                                out.extend(self.eval(&arm.body, &env2, q));
                            }
                        }
                    }
                }
                out
            }
            TKind::Call(f, args) => {
                let refs: Vec<&'m TExpr> = args.iter().collect();
                let mut out = Vec::new();
                for o in self.eval_seq(&refs, env, p) {
                    match o {
                        Out::Trunc(q) => out.push(Out::Trunc(q)),
                        Out::Val(vs, q) => out.extend(self.call(f, vs, q)),
                    }
                }
                out
            }
            TKind::Record(q, fs) => {
                let names: Vec<String> = self
                    .m
                    .record_fields(&e.ty)
                    .map(|d| d.iter().map(|(n, _)| n.clone()).collect())
                    .unwrap_or_default();
                let refs: Vec<&'m TExpr> = fs.iter().collect();
                let q = q.clone();
                self.eval_seq(&refs, env, p)
                    .into_iter()
                    .map(|o| match o {
                        Out::Val(vs, p) => Out::Val(SVal::Record(q.clone(), names.iter().cloned().zip(vs).collect()), p),
                        Out::Trunc(p) => Out::Trunc(p),
                    })
                    .collect()
            }
            TKind::Field(x, i) => self.map(x, env, p, |v| match v {
                SVal::Record(_, mut fs) => fs.swap_remove(*i).1,
                other => unreachable!("field of non-record {other}"),
            }),
            TKind::Ctor(i, args) => {
                let name = self.m.ctors_of(&e.ty).expect("constructor type")[*i].name.clone();
                let refs: Vec<&'m TExpr> = args.iter().collect();
                let ty = e.ty.clone();
                self.eval_seq(&refs, env, p)
                    .into_iter()
                    .map(|o| match o {
                        Out::Val(vs, p) => Out::Val(SVal::Ctor(ty.clone(), *i, name.clone(), vs), p),
                        Out::Trunc(p) => Out::Trunc(p),
                    })
                    .collect()
            }
            TKind::Tuple(xs) => {
                let refs: Vec<&'m TExpr> = xs.iter().collect();
                self.eval_seq(&refs, env, p)
                    .into_iter()
                    .map(|o| match o {
                        Out::Val(vs, p) => Out::Val(SVal::Tuple(vs), p),
                        Out::Trunc(p) => Out::Trunc(p),
                    })
                    .collect()
            }
        }
    }

    fn map(&mut self, x: &'m TExpr, env: &Env, p: Path, f: impl Fn(SVal) -> SVal) -> Vec<Out<SVal>> {
        self.eval(x, env, p)
            .into_iter()
            .map(|o| match o {
                Out::Val(v, p) => Out::Val(f(v), p),
                Out::Trunc(p) => Out::Trunc(p),
            })
            .collect()
    }

    fn eval_seq(&mut self, xs: &[&'m TExpr], env: &Env, p: Path) -> Vec<Out<Vec<SVal>>> {
        let mut acc = vec![Out::Val(Vec::new(), p)];
        for x in xs {
            let mut next = Vec::new();
            for o in acc {
                match o {
                    Out::Trunc(q) => next.push(Out::Trunc(q)),
                    Out::Val(vs, q) => {
                        for r in self.eval(x, env, q) {
                            next.push(match r {
                                Out::Val(v, q) => {
                                    let mut vs = vs.clone();
                                    vs.push(v);
                                    Out::Val(vs, q)
                                }
                                Out::Trunc(q) => Out::Trunc(q),
                            });
                        }
                    }
                }
            }
            acc = next;
        }
        acc
    }

    /// Whether evaluating `e` can fork the path or hit the unroll bound.
    fn may_fork(&self, e: &TExpr) -> bool {
        let mut fork = false;
        crate::lang::module::visit(e, &mut |x| match &x.kind {
            TKind::If(..) | TKind::Match(..) => fork = true,
            TKind::Call(f, _) => fork |= !self.is_atomic(f),
            TKind::Binary(BinOp::Eq | BinOp::Neq, a, _) => fork |= self.m.is_recursive_type(&a.ty),
            _ => {}
        });
        fork
    }

    fn logical(&mut self, op: BinOp, a: &'m TExpr, b: &'m TExpr, env: &Env, p: Path) -> Vec<Out<SVal>> {
        let mut out = Vec::new();
        let simple = !self.may_fork(b);
        for o in self.eval(a, env, p) {
            let (fa, q) = match o {
                Out::Trunc(q) => {
                    out.push(Out::Trunc(q));
                    continue;
                }
                Out::Val(v, q) => (as_bool(v), q),
            };
            // `a && b` evaluates b only when a holds; `a || b` and `a ==> b`
            // only when a is false or true respectively.
            let (guard, short) = match op {
                BinOp::And => (fa.clone(), false),
                BinOp::Or => (Formula::not(fa.clone()), true),
                _ => (fa.clone(), true),
            };
            if simple && fa.as_const().is_none() {
                for r in self.eval(b, env, q) {
                    out.push(match r {
                        Out::Val(v, q) => {
                            let fb = as_bool(v);
                            let f = match op {
                                BinOp::And => Formula::and(vec![fa.clone(), fb]),
                                BinOp::Or => Formula::or(vec![fa.clone(), fb]),
                                _ => Formula::implies(fa.clone(), fb),
                            };
                            Out::Val(SVal::Bool(f), q)
                        }
                        Out::Trunc(q) => Out::Trunc(q),
                    });
                }
                continue;
            }
            let (yes, no) = self.branch(q, &guard);
            if let Some(q) = yes {
                out.extend(self.eval(b, env, q));
            }
            if let Some(q) = no {
                out.push(Out::Val(SVal::Bool(Formula::Const(short)), q));
            }
        }
        out
    }

    fn binary(&mut self, op: BinOp, x: SVal, y: SVal, operand_ty: &Ty) -> SVal {
        let (k, a) = as_num(x);
        let (_, b) = as_num(y);
        let kind = num_kind(operand_ty);
        match op {
            BinOp::Add => SVal::Num(k, a.add(&b)),
            BinOp::Sub => SVal::Num(k, a.sub(&b)),
            BinOp::Mul => match (a.as_constant(), b.as_constant()) {
                (Some(c), _) => SVal::Num(k, b.scale(c)),
                (_, Some(c)) => SVal::Num(k, a.scale(c)),
                _ => nonlinear(ArithOp::Mul, k, a, b),
            },
            BinOp::Div => match b.as_constant() {
                Some(c) if !c.is_zero() => SVal::Num(k, a.scale(&(Q::one() / c))),
                _ => nonlinear(ArithOp::Div, k, a, b),
            },
            BinOp::IntDiv | BinOp::Mod => {
                let aop = if op == BinOp::IntDiv { ArithOp::IntDiv } else { ArithOp::Mod };
                match (a.as_constant(), b.as_constant()) {
                    (Some(x), Some(y)) if !y.is_zero() => {
                        let (x, y) = (x.to_integer(), y.to_integer());
                        let q = &x / &y;
                        let r = if aop == ArithOp::IntDiv { q } else { &x - q * &y };
                        SVal::Num(k, LinExpr::constant(Q::from_integer(r)))
                    }
                    _ => nonlinear(aop, k, a, b),
                }
            }
            BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge => SVal::Bool(Formula::num_rel(op, kind, &a, &b)),
            _ => unreachable!("operator {op:?} handled elsewhere"),
        }
    }

    fn is_atomic(&self, f: &str) -> bool {
        self.basis.contains(f) || self.m.functions.get(f).is_none_or(FunInfo::is_opaque)
    }

    pub fn call(&mut self, f: &str, args: Vec<SVal>, p: Path) -> Vec<Out<SVal>> {
        if self.is_atomic(f) {
            let ret = self.m.functions[f].ret.clone();
            let atom = Atom::App(f.to_string(), args);
            let p = self.instantiate_axioms(&atom, p);
            return vec![Out::Val(self.input(atom, &ret), p)];
        }
        self.inline(f, args, p)
    }

    /// Inlines a function body, respecting the unroll bound.
    pub fn inline(&mut self, f: &str, args: Vec<SVal>, mut p: Path) -> Vec<Out<SVal>> {
        let info = &self.m.functions[f];
        let active = p.frames.get(f).copied().unwrap_or(0);
        if active > self.depth {
            return vec![Out::Trunc(p)];
        }
        p.frames.insert(f.to_string(), active + 1);
        let env: Env = info.params.iter().map(|(n, _)| n.clone()).zip(args).collect();
        let body = info.body.as_ref().expect("inlined function has a body");
        let mut out = self.eval(body, &env, p);
        for o in &mut out {
            let q = match o {
                Out::Val(_, q) | Out::Trunc(q) => q,
            };
            q.frames.insert(f.to_string(), active);
        }
        out
    }

    /// Instantiates every axiom that mentions `atom`'s function applied to
    /// its own parameters.
    fn instantiate_axioms(&mut self, atom: &Atom, mut p: Path) -> Path {
        let Atom::App(f, args) = atom else { return p };
        if !p.instantiated.insert(atom.clone()) {
            return p;
        }
        let m = self.m;
        for ax in &m.axioms {
            let mut binding: Option<Env> = None;
            crate::lang::module::visit(&ax.body, &mut |x| {
                if binding.is_some() {
                    return;
                }
                if let TKind::Call(g, es) = &x.kind {
                    if g != f {
                        return;
                    }
                    let mut env: Env = Vec::new();
                    for (e, a) in es.iter().zip(args) {
                        match &e.kind {
                            TKind::Var(v) if ax.params.iter().any(|(n, _)| n == v) => {
                                if let Some((_, prev)) = env.iter().find(|(n, _)| n == v) {
                                    if prev != a {
                                        return;
                                    }
                                } else {
                                    env.push((v.clone(), a.clone()));
                                }
                            }
                            _ => return,
                        }
                    }
                    if ax.params.iter().all(|(n, _)| env.iter().any(|(b, _)| b == n)) {
                        binding = Some(env);
                    }
                }
            });
            let Some(env) = binding else { continue };
            let fresh = Path { frames: p.frames.clone(), instantiated: p.instantiated.clone(), ..Path::default() };
            let outs = self.eval(&ax.body, &env, fresh);
            if let [Out::Val(SVal::Bool(phi), q)] = outs.as_slice() {
                if q.cons.is_empty() {
                    p.instantiated.extend(q.instantiated.iter().cloned());
                    p.assumptions.extend(q.assumptions.iter().cloned());
                    if phi.as_const() != Some(true) {
                        p.assumptions.push(phi.clone());
                        p.model = None;
                    }
                }
            }
        }
        p
    }

    /// Case-splits a value on its constructor, following the order of
    /// `arm_ctors` (`None` is a catch-all). Returns the chosen arm index, the
    /// value with its constructor exposed, and the refined path.
    pub fn select(&mut self, v: SVal, ty: &Ty, arm_ctors: &[Option<usize>], p: Path) -> Vec<(usize, SVal, Path)> {
        match v {
            SVal::Ctor(_, i, _, _) => {
                let k = arm_ctors.iter().position(|c| c.is_none_or(|c| c == i)).expect("exhaustive match");
                vec![(k, v, p)]
            }
            SVal::Tuple(_) | SVal::Record(..) => vec![(0, v, p)],
            SVal::Adt(atom, _) => {
                let sig = self.sig(ty);
                let ctors = self.m.ctors_of(ty).unwrap();
                let mut remaining: BTreeSet<usize> = (0..ctors.len()).collect();
                let mut out = Vec::new();
                let mut cur = Some(p);
                for (k, c) in arm_ctors.iter().enumerate() {
                    let Some(q) = cur.take() else { break };
                    let i = match c {
                        Some(i) if remaining.contains(i) => *i,
                        Some(_) => {
                            cur = Some(q);
                            continue;
                        }
                        None => {
                            out.push((k, SVal::Adt(atom.clone(), ty.clone()), q));
                            break;
                        }
                    };
                    if remaining.len() == 1 {
                        out.push((k, self.expose(&atom, ty, i), q));
                        break;
                    }
                    let f = Formula::IsCtor(atom.clone(), sig.clone(), i);
                    let (yes, no) = self.branch(q, &f);
                    if let Some(y) = yes {
                        out.push((k, self.expose(&atom, ty, i), y));
                    }
                    remaining.remove(&i);
                    cur = no;
                }
                out
            }
            other => unreachable!("match on {other}"),
        }
    }

    fn expose(&self, atom: &Atom, ty: &Ty, i: usize) -> SVal {
        let c = &self.m.ctors_of(ty).unwrap()[i];
        let args = c.fields.iter().enumerate().map(|(j, t)| self.input(atom.slot(&c.name, j), t)).collect();
        SVal::Ctor(ty.clone(), i, c.name.clone(), args)
    }

    fn value_ty(v: &SVal) -> Option<&Ty> {
        match v {
            SVal::Adt(_, t) | SVal::Ctor(t, _, _, _) => Some(t),
            _ => None,
        }
    }

    /// Equality without forking; `None` when a recursive type needs a case split.
    fn eq_formula(&mut self, a: &SVal, b: &SVal) -> Option<Formula> {
        Some(match (a, b) {
            (SVal::Num(k, x), SVal::Num(_, y)) => Formula::num_rel(BinOp::Eq, *k, x, y),
            (SVal::Bool(x), SVal::Bool(y)) => Formula::iff(x.clone(), y.clone()),
            (SVal::Tuple(xs), SVal::Tuple(ys)) => {
                let parts = xs.iter().zip(ys).map(|(x, y)| self.eq_formula(x, y)).collect::<Option<Vec<_>>>()?;
                Formula::and(parts)
            }
            (SVal::Record(_, xs), SVal::Record(_, ys)) => {
                let parts = xs.iter().zip(ys).map(|(x, y)| self.eq_formula(&x.1, &y.1)).collect::<Option<Vec<_>>>()?;
                Formula::and(parts)
            }
            (SVal::Ctor(_, i, _, xs), SVal::Ctor(_, j, _, ys)) => {
                if i != j {
                    return Some(FALSE);
                }
                let parts = xs.iter().zip(ys).map(|(x, y)| self.eq_formula(x, y)).collect::<Option<Vec<_>>>()?;
                Formula::and(parts)
            }
            (SVal::Adt(x, ty), c @ SVal::Ctor(_, i, _, _)) | (c @ SVal::Ctor(_, i, _, _), SVal::Adt(x, ty)) => {
                let sig = self.sig(ty);
                let exposed = self.expose(x, ty, *i);
                let payload = self.eq_formula(&exposed, c)?;
                Formula::and(vec![Formula::IsCtor(x.clone(), sig, *i), payload])
            }
            (SVal::Adt(x, ty), SVal::Adt(y, _)) => {
                if x == y {
                    return Some(TRUE);
                }
                if self.m.is_recursive_type(ty) {
                    return None;
                }
                let sig = self.sig(ty);
                let mut alts = Vec::new();
                for i in 0..sig.ctors.len() {
                    let ex = self.expose(x, ty, i);
                    let ey = self.expose(y, ty, i);
                    let payload = self.eq_formula(&ex, &ey)?;
                    alts.push(Formula::and(vec![
                        Formula::IsCtor(x.clone(), sig.clone(), i),
                        Formula::IsCtor(y.clone(), sig.clone(), i),
                        payload,
                    ]));
                }
                Formula::or(alts)
            }
            (x, y) => unreachable!("comparing {x} with {y}"),
        })
    }

    /// Structural equality, case-splitting recursive values up to `fuel` levels.
    pub fn equal(&mut self, a: &SVal, b: &SVal, p: Path, fuel: usize) -> Vec<Out<Formula>> {
        if let Some(f) = self.eq_formula(a, b) {
            return vec![Out::Val(f, p)];
        }
        let pairs: Vec<(SVal, SVal)> = match (a, b) {
            (SVal::Tuple(xs), SVal::Tuple(ys)) => xs.iter().cloned().zip(ys.iter().cloned()).collect(),
            (SVal::Record(_, xs), SVal::Record(_, ys)) => {
                xs.iter().map(|x| x.1.clone()).zip(ys.iter().map(|y| y.1.clone())).collect()
            }
            (SVal::Ctor(_, i, _, xs), SVal::Ctor(_, j, _, ys)) => {
                if i != j {
                    return vec![Out::Val(FALSE, p)];
                }
                xs.iter().cloned().zip(ys.iter().cloned()).collect()
            }
            _ => {
                if fuel == 0 {
                    return vec![Out::Trunc(p)];
                }
                let (adt, other) = if matches!(a, SVal::Adt(..)) { (a, b) } else { (b, a) };
                let ty = Self::value_ty(adt).unwrap().clone();
                let n = self.m.ctors_of(&ty).unwrap().len();
                let arms: Vec<Option<usize>> = (0..n).map(Some).collect();
                let mut out = Vec::new();
                for (_, cv, q) in self.select(adt.clone(), &ty, &arms, p) {
                    out.extend(self.equal(&cv, other, q, fuel - 1));
                }
                return out;
            }
        };
        let mut acc = vec![Out::Val(TRUE, p)];
        for (x, y) in pairs {
            let mut next = Vec::new();
            for o in acc {
                match o {
                    Out::Trunc(q) => next.push(Out::Trunc(q)),
                    Out::Val(f, q) if f == FALSE => next.push(Out::Val(f, q)),
                    Out::Val(f, q) => {
                        for r in self.equal(&x, &y, q, fuel) {
                            next.push(match r {
                                Out::Val(g, q) => Out::Val(Formula::and(vec![f.clone(), g]), q),
                                Out::Trunc(q) => Out::Trunc(q),
                            });
                        }
                    }
                }
            }
            acc = next;
        }
        acc
    }
}

fn nonlinear(op: ArithOp, k: NumKind, a: LinExpr, b: LinExpr) -> SVal {
    SVal::Num(k, LinExpr::atom(Atom::Arith(op, k, Arc::new(a), Arc::new(b))))
}
