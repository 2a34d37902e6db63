//! Evaluation of symbolic terms under a solver model or under concrete inputs.

use super::term::{ArithOp, Atom, AdtSig, CmpOp, Formula, LinExpr, NumKind, SVal};
use crate::eval::{Evaluator, Value};
use crate::lang::ast::{bare, Ty, CONS};
use crate::lang::module::{Module, TypeKind};
use num_bigint::BigInt;
use num_rational::BigRational as Q;
use num_traits::{Signed, Zero};
use std::cell::RefCell;
use std::collections::BTreeMap;

/// A satisfying assignment. Atoms missing from a map take their default
/// (zero, false, or the type's base constructor).
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Model {
    pub nums: BTreeMap<Atom, Q>,
    pub bools: BTreeMap<Atom, bool>,
    pub ctors: BTreeMap<Atom, usize>,
}

/// Source of atom values.
pub trait Valuation {
    fn num(&self, a: &Atom) -> Option<Q>;
    fn boolean(&self, a: &Atom) -> Option<bool>;
    fn ctor(&self, a: &Atom, sig: &AdtSig) -> Option<usize>;
    fn adt(&self, a: &Atom, ty: &Ty) -> Option<Value>;
}

pub fn eval_lin(e: &LinExpr, v: &dyn Valuation) -> Option<Q> {
    let mut acc = e.constant.clone();
    for (a, c) in &e.terms {
        acc += c * v.num(a)?;
    }
    Some(acc)
}

/// Three-valued evaluation: `None` when some atom is undefined (for example a
/// constructor slot read under the wrong constructor).
pub fn eval_formula(f: &Formula, v: &dyn Valuation) -> Option<bool> {
    match f {
        Formula::Const(b) => Some(*b),
        Formula::Var(a) => v.boolean(a),
        Formula::IsCtor(a, sig, i) => Some(v.ctor(a, sig)? == *i),
        Formula::Cmp(op, _, e) => {
            let x = eval_lin(e, v)?;
            Some(match op {
                CmpOp::Le => !x.is_positive(),
                CmpOp::Lt => x.is_negative(),
                CmpOp::Eq => x.is_zero(),
            })
        }
        Formula::Not(x) => eval_formula(x, v).map(|b| !b),
        Formula::And(xs) => {
            let mut undefined = false;
            for x in xs {
                match eval_formula(x, v) {
                    Some(false) => return Some(false),
                    None => undefined = true,
                    Some(true) => {}
                }
            }
            if undefined {
                None
            } else {
                Some(true)
            }
        }
        Formula::Or(xs) => {
            let mut undefined = false;
            for x in xs {
                match eval_formula(x, v) {
                    Some(true) => return Some(true),
                    None => undefined = true,
                    Some(false) => {}
                }
            }
            if undefined {
                None
            } else {
                Some(false)
            }
        }
    }
}

fn num_value(kind: NumKind, q: Q) -> Option<Value> {
    match kind {
        NumKind::Int if q.is_integer() => Some(Value::Int(q.to_integer())),
        NumKind::Int => None,
        NumKind::Rat => Some(Value::Rat(q)),
    }
}

/// Concrete value of a symbolic value.
pub fn eval_sval(s: &SVal, v: &dyn Valuation) -> Option<Value> {
    match s {
        SVal::Num(kind, e) => num_value(*kind, eval_lin(e, v)?),
        SVal::Bool(f) => eval_formula(f, v).map(Value::Bool),
        SVal::Adt(a, ty) => v.adt(a, ty),
        SVal::Ctor(Ty::List(_), i, _, args) => {
            if *i == 0 {
                return Some(Value::List(vec![]));
            }
            let head = eval_sval(&args[0], v)?;
            match eval_sval(&args[1], v)? {
                Value::List(mut rest) => {
                    rest.insert(0, head);
                    Some(Value::List(rest))
                }
                _ => None,
            }
        }
        SVal::Ctor(_, _, name, args) => {
            let vals = args.iter().map(|a| eval_sval(a, v)).collect::<Option<Vec<_>>>()?;
            Some(Value::Variant(name.clone(), vals))
        }
        SVal::Record(q, fs) => {
            let vals = fs
                .iter()
                .map(|(n, x)| eval_sval(x, v).map(|y| (n.clone(), y)))
                .collect::<Option<Vec<_>>>()?;
            Some(Value::Record(bare(q).to_string(), vals))
        }
        SVal::Tuple(xs) => Some(Value::Tuple(xs.iter().map(|x| eval_sval(x, v)).collect::<Option<Vec<_>>>()?)),
    }
}

fn arith_atom(op: ArithOp, kind: NumKind, x: Q, y: Q) -> Option<Q> {
    match op {
        ArithOp::Mul => Some(x * y),
        ArithOp::Div => (!y.is_zero()).then(|| x / y),
        ArithOp::IntDiv | ArithOp::Mod => {
            if y.is_zero() || kind != NumKind::Int || !x.is_integer() || !y.is_integer() {
                return None;
            }
            let (a, b) = (x.to_integer(), y.to_integer());
            let q: BigInt = &a / &b;
            Some(Q::from_integer(if op == ArithOp::IntDiv { q } else { &a - q * &b }))
        }
    }
}

/// Reads atoms from a model, treating every non-arithmetic atom as a leaf.
pub struct ModelValuation<'a> {
    pub model: &'a Model,
    pub module: &'a Module,
}

impl Valuation for ModelValuation<'_> {
    fn num(&self, a: &Atom) -> Option<Q> {
        if let Atom::Arith(op, kind, x, y) = a {
            return arith_atom(*op, *kind, eval_lin(x, self)?, eval_lin(y, self)?);
        }
        Some(self.model.nums.get(a).cloned().unwrap_or_else(Q::zero))
    }

    fn boolean(&self, a: &Atom) -> Option<bool> {
        Some(self.model.bools.get(a).copied().unwrap_or(false))
    }

    fn ctor(&self, a: &Atom, sig: &AdtSig) -> Option<usize> {
        Some(self.model.ctors.get(a).copied().unwrap_or(sig.base))
    }

    fn adt(&self, a: &Atom, ty: &Ty) -> Option<Value> {
        build_value(a, ty, self.model, self.module)
    }
}

/// Builds the concrete value of an input atom of type `ty` from a model.
pub fn build_value(a: &Atom, ty: &Ty, model: &Model, m: &Module) -> Option<Value> {
    build_at(a, ty, model, m, 0)
}

const MAX_BUILD_DEPTH: usize = 10_000;

fn build_at(a: &Atom, ty: &Ty, model: &Model, m: &Module, depth: usize) -> Option<Value> {
    if depth > MAX_BUILD_DEPTH {
        return None;
    }
    let mv = ModelValuation { model, module: m };
    match ty {
        Ty::Int => num_value(NumKind::Int, mv.num(a)?),
        Ty::Rat => num_value(NumKind::Rat, mv.num(a)?),
        Ty::Bool => Some(Value::Bool(mv.boolean(a)?)),
        Ty::Tuple(ts) => {
            let vs = ts
                .iter()
                .enumerate()
                .map(|(i, t)| build_at(&a.elem(i), t, model, m, depth + 1))
                .collect::<Option<Vec<_>>>()?;
            Some(Value::Tuple(vs))
        }
        Ty::List(e) => {
            let mut items = Vec::new();
            let mut cur = a.clone();
            while model.ctors.get(&cur).copied().unwrap_or(0) == 1 {
                if items.len() > MAX_BUILD_DEPTH {
                    return None;
                }
                items.push(build_at(&cur.slot(CONS, 0), e, model, m, depth + 1)?);
                cur = cur.slot(CONS, 1);
            }
            Some(Value::List(items))
        }
        Ty::Named(q) => {
            let info = m.type_info(q)?;
            match &info.kind {
                TypeKind::Record(fs) => {
                    let vs = fs
                        .iter()
                        .map(|(n, t)| build_at(&a.field(n), t, model, m, depth + 1).map(|v| (n.clone(), v)))
                        .collect::<Option<Vec<_>>>()?;
                    Some(Value::Record(info.name.clone(), vs))
                }
                TypeKind::Variant(cs) => {
                    let i = model.ctors.get(a).copied().unwrap_or(info.base_ctor);
                    let c = cs.get(i)?;
                    let vs = c
                        .fields
                        .iter()
                        .enumerate()
                        .map(|(j, t)| build_at(&a.slot(&c.name, j), t, model, m, depth + 1))
                        .collect::<Option<Vec<_>>>()?;
                    Some(Value::Variant(c.name.clone(), vs))
                }
            }
        }
    }
}

/// Resolves atoms structurally against concrete parameter values; opaque
/// and basis applications are executed by the evaluator when possible.
pub struct InputValuation<'a> {
    pub module: &'a Module,
    pub params: BTreeMap<String, Value>,
    cache: RefCell<BTreeMap<Atom, Option<Value>>>,
}

impl<'a> InputValuation<'a> {
    pub fn new(module: &'a Module, params: BTreeMap<String, Value>) -> Self {
        InputValuation { module, params, cache: RefCell::new(BTreeMap::new()) }
    }

    pub fn value(&self, a: &Atom) -> Option<Value> {
        if let Some(v) = self.cache.borrow().get(a) {
            return v.clone();
        }
        let v = self.compute(a);
        self.cache.borrow_mut().insert(a.clone(), v.clone());
        v
    }

    fn compute(&self, a: &Atom) -> Option<Value> {
        match a {
            Atom::Param(p) => self.params.get(p).cloned(),
            Atom::Field(x, f) => self.value(x)?.field(f).cloned(),
            Atom::Elem(x, i) => match self.value(x)? {
                Value::Tuple(mut vs) if *i < vs.len() => Some(vs.swap_remove(*i)),
                _ => None,
            },
            Atom::Slot(x, c, i) => match self.value(x)? {
                Value::Variant(n, mut vs) if n == *c && *i < vs.len() => Some(vs.swap_remove(*i)),
                Value::List(mut vs) if c == CONS && !vs.is_empty() => match i {
                    0 => Some(vs.swap_remove(0)),
                    1 => {
                        vs.remove(0);
                        Some(Value::List(vs))
                    }
                    _ => None,
                },
                _ => None,
            },
            Atom::App(f, args) => {
                let vals = args.iter().map(|s| eval_sval(s, self)).collect::<Option<Vec<_>>>()?;
                Evaluator::new(self.module).call(f, &vals).ok()
            }
            Atom::Arith(op, kind, x, y) => {
                num_value(*kind, arith_atom(*op, *kind, eval_lin(x, self)?, eval_lin(y, self)?)?)
            }
        }
    }
}

impl Valuation for InputValuation<'_> {
    fn num(&self, a: &Atom) -> Option<Q> {
        match self.value(a)? {
            Value::Int(n) => Some(Q::from_integer(n)),
            Value::Rat(q) => Some(q),
            _ => None,
        }
    }

    fn boolean(&self, a: &Atom) -> Option<bool> {
        self.value(a)?.as_bool()
    }

    fn ctor(&self, a: &Atom, sig: &AdtSig) -> Option<usize> {
        match self.value(a)? {
            Value::List(vs) => Some(usize::from(!vs.is_empty())),
            Value::Variant(n, _) => sig.ctors.iter().position(|c| *c == n),
            _ => None,
        }
    }

    fn adt(&self, a: &Atom, _ty: &Ty) -> Option<Value> {
        self.value(a)
    }
}
