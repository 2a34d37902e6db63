use super::value::Value;
use crate::lang::ast::{bare, BinOp, Ty, UnOp};
use crate::lang::module::{FunInfo, Module, TExpr, TKind, TPattern, TypeKind};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Zero;
use thiserror::Error;

pub const DEFAULT_STEP_BUDGET: u64 = 10_000_000;
const MAX_CALL_DEPTH: usize = 400;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EvalError {
    #[error("division by zero")]
    DivisionByZero,
    #[error("opaque call: {0}")]
    OpaqueCall(String),
    #[error("step budget of {0} exhausted")]
    StepBudget(u64),
    #[error("call depth limit exceeded")]
    CallDepth,
    #[error("unknown function {0}")]
    UnknownFunction(String),
    #[error("function {name} expects {expected} arguments, got {got}")]
    Arity { name: String, expected: usize, got: usize },
    #[error("argument {0} has the wrong type")]
    ArgumentType(String),
    #[error("internal evaluation error: {0}")]
    Internal(String),
}

/// Evaluates `f` applied to `args` with the default step budget.
pub fn eval_call(m: &Module, f: &str, args: &[Value]) -> Result<Value, EvalError> {
    Evaluator::new(m).call(f, args)
}

pub struct Evaluator<'m> {
    m: &'m Module,
    budget: u64,
    steps: u64,
    depth: usize,
}

impl<'m> Evaluator<'m> {
    pub fn new(m: &'m Module) -> Self {
        Evaluator { m, budget: DEFAULT_STEP_BUDGET, steps: 0, depth: 0 }
    }

    pub fn with_budget(m: &'m Module, budget: u64) -> Self {
        Evaluator { m, budget, steps: 0, depth: 0 }
    }

    pub fn steps(&self) -> u64 {
        self.steps
    }

    /// Type-checked entry point.
    pub fn call(&mut self, f: &str, args: &[Value]) -> Result<Value, EvalError> {
        let info = self.m.function(f).ok_or_else(|| EvalError::UnknownFunction(f.to_string()))?;
        if info.params.len() != args.len() {
            return Err(EvalError::Arity { name: f.to_string(), expected: info.params.len(), got: args.len() });
        }
        for ((p, t), v) in info.params.iter().zip(args) {
            if !v.has_type(self.m, t) {
                return Err(EvalError::ArgumentType(p.clone()));
            }
        }
        self.apply(info, args.to_vec())
    }

    fn apply(&mut self, info: &'m FunInfo, args: Vec<Value>) -> Result<Value, EvalError> {
        let Some(body) = &info.body else { return Err(EvalError::OpaqueCall(info.name.clone())) };
        if self.depth >= MAX_CALL_DEPTH {
            return Err(EvalError::CallDepth);
        }
        self.depth += 1;
        let mut env: Vec<(String, Value)> = info.params.iter().map(|(p, _)| p.clone()).zip(args).collect();
        let r = self.eval(body, &mut env);
        self.depth -= 1;
        r
    }

    /// Evaluates an expression in an environment of bound variables.
    pub fn eval(&mut self, e: &'m TExpr, env: &mut Vec<(String, Value)>) -> Result<Value, EvalError> {
        self.steps += 1;
        if self.steps > self.budget {
            return Err(EvalError::StepBudget(self.budget));
        }
        match &e.kind {
            TKind::Int(n) => Ok(Value::Int(n.clone())),
            TKind::Rat(r) => Ok(Value::Rat(r.clone())),
            TKind::Bool(b) => Ok(Value::Bool(*b)),
            TKind::Var(x) => env
                .iter()
                .rev()
                .find(|(n, _)| n == x)
                .map(|(_, v)| v.clone())
                .ok_or_else(|| EvalError::Internal(format!("unbound variable {x}"))),
            TKind::Unary(UnOp::Neg, x) => match self.eval(x, env)? {
                Value::Int(n) => Ok(Value::Int(-n)),
                Value::Rat(r) => Ok(Value::Rat(-r)),
                _ => Err(EvalError::Internal("negation of non-number".into())),
            },
            TKind::Unary(UnOp::Not, x) => Ok(Value::Bool(!self.eval_bool(x, env)?)),
            TKind::Binary(op, a, b) => self.binary(*op, a, b, env),
            TKind::If(c, t, f) => {
                if self.eval_bool(c, env)? {
                    self.eval(t, env)
                } else {
                    self.eval(f, env)
                }
            }
            TKind::Let(n, b, body) => {
                let v = self.eval(b, env)?;
                env.push((n.clone(), v));
                let r = self.eval(body, env);
                env.pop();
                r
            }
            TKind::Match(s, arms) => {
                let v = self.eval(s, env)?;
                let (idx, payload): (Option<usize>, Vec<Value>) = match (&s.ty, v) {
                    (Ty::List(_), Value::List(mut xs)) => {
                        if xs.is_empty() {
                            (Some(0), vec![])
                        } else {
                            let h = xs.remove(0);
                            (Some(1), vec![h, Value::List(xs)])
                        }
                    }
                    (Ty::Named(q), Value::Variant(c, args)) => {
                        let Some(TypeKind::Variant(cs)) = self.m.types.get(q).map(|t| &t.kind) else {
                            return Err(EvalError::Internal(format!("unknown variant type {q}")));
                        };
                        (cs.iter().position(|k| k.name == c), args)
                    }
                    (Ty::Tuple(_), Value::Tuple(items)) => (None, items),
                    _ => return Err(EvalError::Internal("match on ill-typed value".into())),
                };
                for arm in arms {
                    let binders = match &arm.pattern {
                        TPattern::Wildcard => vec![],
                        TPattern::Ctor(i, bs) if Some(*i) == idx => bs.clone(),
                        TPattern::Tuple(bs) => bs.clone(),
                        TPattern::Ctor(..) => continue,
                    };
                    let n = env.len();
                    for (b, v) in binders.iter().zip(&payload) {
                        if let Some(b) = b {
                            env.push((b.clone(), v.clone()));
                        }
                    }
                    let r = self.eval(&arm.body, env);
                    env.truncate(n);
                    return r;
                }
                Err(EvalError::Internal("no match arm applies".into()))
            }
            TKind::Call(f, args) => {
                let info = self.m.functions.get(f).ok_or_else(|| EvalError::UnknownFunction(f.clone()))?;
                let mut vs = Vec::with_capacity(args.len());
                for a in args {
                    vs.push(self.eval(a, env)?);
                }
                self.apply(info, vs)
            }
            TKind::Record(q, fields) => {
                let info = self.m.types.get(q).ok_or_else(|| EvalError::Internal(format!("unknown type {q}")))?;
                let TypeKind::Record(decl) = &info.kind else {
                    return Err(EvalError::Internal(format!("{q} is not a record")));
                };
                let mut out = Vec::with_capacity(fields.len());
                for ((name, _), x) in decl.iter().zip(fields) {
                    out.push((name.clone(), self.eval(x, env)?));
                }
                Ok(Value::Record(info.name.clone(), out))
            }
            TKind::Field(x, i) => match self.eval(x, env)? {
                Value::Record(_, mut fs) if *i < fs.len() => Ok(fs.swap_remove(*i).1),
                _ => Err(EvalError::Internal("field access on non-record".into())),
            },
            TKind::Ctor(i, args) => {
                let mut vs = Vec::with_capacity(args.len());
                for a in args {
                    vs.push(self.eval(a, env)?);
                }
                match &e.ty {
                    Ty::List(_) => {
                        if *i == 0 {
                            Ok(Value::List(vec![]))
                        } else {
                            let tail = vs.pop().unwrap();
                            let head = vs.pop().unwrap();
                            let Value::List(mut xs) = tail else {
                                return Err(EvalError::Internal("cons onto non-list".into()));
                            };
                            xs.insert(0, head);
                            Ok(Value::List(xs))
                        }
                    }
                    Ty::Named(q) => {
                        let Some(TypeKind::Variant(cs)) = self.m.types.get(q).map(|t| &t.kind) else {
                            return Err(EvalError::Internal(format!("unknown variant type {q}")));
                        };
                        Ok(Value::Variant(cs[*i].name.clone(), vs))
                    }
                    _ => Err(EvalError::Internal("constructor of non-variant type".into())),
                }
            }
            TKind::Tuple(items) => {
                let mut vs = Vec::with_capacity(items.len());
                for x in items {
                    vs.push(self.eval(x, env)?);
                }
                Ok(Value::Tuple(vs))
            }
        }
    }

    fn eval_bool(&mut self, e: &'m TExpr, env: &mut Vec<(String, Value)>) -> Result<bool, EvalError> {
        match self.eval(e, env)? {
            Value::Bool(b) => Ok(b),
            _ => Err(EvalError::Internal("expected a boolean".into())),
        }
    }

    fn binary(&mut self, op: BinOp, a: &'m TExpr, b: &'m TExpr, env: &mut Vec<(String, Value)>) -> Result<Value, EvalError> {
        match op {
            BinOp::And => return Ok(Value::Bool(self.eval_bool(a, env)? && self.eval_bool(b, env)?)),
            BinOp::Or => return Ok(Value::Bool(self.eval_bool(a, env)? || self.eval_bool(b, env)?)),
            BinOp::Implies => return Ok(Value::Bool(!self.eval_bool(a, env)? || self.eval_bool(b, env)?)),
            _ => {}
        }
        let x = self.eval(a, env)?;
        let y = self.eval(b, env)?;
        arith(op, x, y)
    }
}

/// Applies a strict binary operator to two values.
pub fn arith(op: BinOp, x: Value, y: Value) -> Result<Value, EvalError> {
    use Value::*;
    Ok(match (op, x, y) {
        (BinOp::Eq, x, y) => Bool(x == y),
        (BinOp::Neq, x, y) => Bool(x != y),
        (BinOp::Add, Int(a), Int(b)) => Int(a + b),
        (BinOp::Sub, Int(a), Int(b)) => Int(a - b),
        (BinOp::Mul, Int(a), Int(b)) => Int(a * b),
        (BinOp::IntDiv, Int(a), Int(b)) => {
            if b.is_zero() {
                return Err(EvalError::DivisionByZero);
            }
            Int(a / b)
        }
        (BinOp::Mod, Int(a), Int(b)) => {
            if b.is_zero() {
                return Err(EvalError::DivisionByZero);
            }
            Int(a % b)
        }
        (BinOp::Add, Rat(a), Rat(b)) => Rat(a + b),
        (BinOp::Sub, Rat(a), Rat(b)) => Rat(a - b),
        (BinOp::Mul, Rat(a), Rat(b)) => Rat(a * b),
        (BinOp::Div, Rat(a), Rat(b)) => {
            if b.is_zero() {
                return Err(EvalError::DivisionByZero);
            }
            Rat(a / b)
        }
        (op @ (BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge), x, y) => {
            let ord = match (x, y) {
                (Int(a), Int(b)) => a.cmp(&b),
                (Rat(a), Rat(b)) => a.cmp(&b),
                _ => return Err(EvalError::Internal("comparison of non-numbers".into())),
            };
            Bool(match op {
                BinOp::Lt => ord.is_lt(),
                BinOp::Le => ord.is_le(),
                BinOp::Gt => ord.is_gt(),
                _ => ord.is_ge(),
            })
        }
        (op, _, _) => return Err(EvalError::Internal(format!("ill-typed operands for {}", op.symbol()))),
    })
}

/// The default value of a type: zero, false, empty list, or the base constructor.
pub fn default_value(m: &Module, ty: &Ty) -> Value {
    match ty {
        Ty::Int => Value::Int(BigInt::zero()),
        Ty::Rat => Value::Rat(BigRational::zero()),
        Ty::Bool => Value::Bool(false),
        Ty::Tuple(ts) => Value::Tuple(ts.iter().map(|t| default_value(m, t)).collect()),
        Ty::List(_) => Value::List(vec![]),
        Ty::Named(q) => match m.types.get(q) {
            Some(info) => match &info.kind {
                TypeKind::Record(fs) => {
                    Value::Record(info.name.clone(), fs.iter().map(|(f, t)| (f.clone(), default_value(m, t))).collect())
                }
                TypeKind::Variant(cs) => {
                    let c = &cs[info.base_ctor];
                    Value::Variant(c.name.clone(), c.fields.iter().map(|t| default_value(m, t)).collect())
                }
            },
            None => Value::Bool(false),
        },
    }
}

/// Builds a value of type `ty` from a literal expression (numbers, booleans,
/// records, constructors, lists and tuples).
pub fn literal_value(m: &Module, e: &crate::lang::ast::Expr, ty: &Ty) -> Result<Value, String> {
    use crate::lang::ast::{ExprKind, CONS, NIL};
    let bad = || format!("`{}` is not a literal of type {ty}", crate::lang::pretty::print_expr(e));
    match (&e.kind, ty) {
        (ExprKind::Int(n), Ty::Int) => Ok(Value::Int(n.clone())),
        (ExprKind::Int(n), Ty::Rat) => Ok(Value::Rat(BigRational::from_integer(n.clone()))),
        (ExprKind::Rat(r), Ty::Rat) => Ok(Value::Rat(r.clone())),
        (ExprKind::Unary(UnOp::Neg, x), Ty::Int | Ty::Rat) => match literal_value(m, x, ty)? {
            Value::Int(n) => Ok(Value::Int(-n)),
            Value::Rat(r) => Ok(Value::Rat(-r)),
            _ => Err(bad()),
        },
        (ExprKind::Binary(BinOp::Div, a, b), Ty::Rat) => match (literal_value(m, a, ty)?, literal_value(m, b, ty)?) {
            (Value::Rat(x), Value::Rat(y)) if !y.is_zero() => Ok(Value::Rat(x / y)),
            _ => Err(bad()),
        },
        (ExprKind::Bool(b), Ty::Bool) => Ok(Value::Bool(*b)),
        (ExprKind::Tuple(items), Ty::Tuple(ts)) if items.len() == ts.len() => {
            Ok(Value::Tuple(items.iter().zip(ts).map(|(x, t)| literal_value(m, x, t)).collect::<Result<_, _>>()?))
        }
        (ExprKind::List(items), Ty::List(t)) => {
            Ok(Value::List(items.iter().map(|x| literal_value(m, x, t)).collect::<Result<_, _>>()?))
        }
        (ExprKind::Ctor(c, args), Ty::List(_)) if c == NIL && args.is_empty() => Ok(Value::List(vec![])),
        (ExprKind::Ctor(c, args), Ty::List(t)) if c == CONS => {
            let h = literal_value(m, &args[0], t)?;
            match literal_value(m, &args[1], ty)? {
                Value::List(mut xs) => {
                    xs.insert(0, h);
                    Ok(Value::List(xs))
                }
                _ => Err(bad()),
            }
        }
        (ExprKind::Record(fields), Ty::Named(q)) => {
            let info = m.types.get(q).ok_or_else(bad)?;
            let TypeKind::Record(decl) = &info.kind else { return Err(bad()) };
            if fields.len() != decl.len() {
                return Err(format!("record {} expects {} fields", info.name, decl.len()));
            }
            let mut out = Vec::new();
            for (f, t) in decl {
                let (_, x) = fields.iter().find(|(n, _)| n == f).ok_or_else(|| format!("missing field {f}"))?;
                out.push((f.clone(), literal_value(m, x, t)?));
            }
            Ok(Value::Record(info.name.clone(), out))
        }
        (ExprKind::Ctor(c, args), Ty::Named(q)) => {
            let info = m.types.get(q).ok_or_else(bad)?;
            let TypeKind::Variant(cs) = &info.kind else { return Err(bad()) };
            let ctor = cs.iter().find(|k| &k.name == c).ok_or_else(|| format!("{c} is not a constructor of {}", bare(q)))?;
            let args: Vec<&crate::lang::ast::Expr> = if ctor.fields.len() == 1 && args.len() > 1 {
                return Ok(Value::Variant(
                    c.clone(),
                    vec![literal_value(m, &crate::lang::ast::Expr { kind: ExprKind::Tuple(args.clone()), span: e.span }, &ctor.fields[0])?],
                ));
            } else {
                args.iter().collect()
            };
            if args.len() != ctor.fields.len() {
                return Err(format!("constructor {c} expects {} arguments", ctor.fields.len()));
            }
            Ok(Value::Variant(
                c.clone(),
                args.iter().zip(&ctor.fields).map(|(x, t)| literal_value(m, x, t)).collect::<Result<_, _>>()?,
            ))
        }
        _ => Err(bad()),
    }
}

