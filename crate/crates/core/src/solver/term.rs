//! Symbolic terms: atoms, linear expressions, formulas and symbolic values.

use crate::lang::ast::{bare, Ty, CONS, NIL};
use crate::lang::pretty::rat_literal;
use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational as Q;
use num_traits::{One, Signed, Zero};
use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum NumKind {
    Int,
    Rat,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ArithOp {
    Mul,
    Div,
    IntDiv,
    Mod,
}

impl ArithOp {
    fn symbol(self) -> &'static str {
        match self {
            ArithOp::Mul => "*",
            ArithOp::Div => "/",
            ArithOp::IntDiv => "div",
            ArithOp::Mod => "mod",
        }
    }
}

/// Leaf of a symbolic term. Structurally equal atoms are the same atom, which
/// gives functional consistency for uninterpreted applications.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Atom {
    Param(String),
    Field(Arc<Atom>, String),
    Elem(Arc<Atom>, usize),
    /// Payload slot `i` of constructor `ctor`, valid when the atom has that constructor.
    Slot(Arc<Atom>, String, usize),
    /// Application of an opaque or basis function.
    App(String, Vec<SVal>),
    /// Nonlinear arithmetic, outside the decided fragment.
    Arith(ArithOp, NumKind, Arc<LinExpr>, Arc<LinExpr>),
}

impl Atom {
    pub fn field(&self, f: &str) -> Atom {
        Atom::Field(Arc::new(self.clone()), f.to_string())
    }

    pub fn elem(&self, i: usize) -> Atom {
        Atom::Elem(Arc::new(self.clone()), i)
    }

    pub fn slot(&self, ctor: &str, i: usize) -> Atom {
        Atom::Slot(Arc::new(self.clone()), ctor.to_string(), i)
    }

    /// Whether the atom mentions an application of one of the given functions.
    pub fn mentions_app(&self, pred: &dyn Fn(&str) -> bool) -> bool {
        match self {
            Atom::Param(_) => false,
            Atom::Field(a, _) | Atom::Elem(a, _) | Atom::Slot(a, _, _) => a.mentions_app(pred),
            Atom::App(f, args) => pred(f) || args.iter().any(|v| v.mentions_app(pred)),
            Atom::Arith(_, _, a, b) => a.mentions_app(pred) || b.mentions_app(pred),
        }
    }

    pub fn is_nonlinear(&self) -> bool {
        match self {
            Atom::Arith(..) => true,
            Atom::Param(_) => false,
            Atom::Field(a, _) | Atom::Elem(a, _) | Atom::Slot(a, _, _) => a.is_nonlinear(),
            Atom::App(_, args) => args.iter().any(|v| v.is_nonlinear()),
        }
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Atom::Param(p) => write!(f, "{p}"),
            Atom::Field(a, n) => write!(f, "{a}.{n}"),
            Atom::Elem(a, i) => write!(f, "{a}.{i}"),
            Atom::Slot(a, c, 0) if c == CONS => write!(f, "List.hd({a})"),
            Atom::Slot(a, c, 1) if c == CONS => write!(f, "List.tl({a})"),
            Atom::Slot(a, c, i) => write!(f, "Destruct({c}, {i}, {a})"),
            Atom::App(g, args) => {
                write!(f, "{}(", bare(g))?;
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        write!(f, ", ")?;
                    }
                    write!(f, "{a}")?;
                }
                write!(f, ")")
            }
            Atom::Arith(op, _, a, b) => write!(f, "({} {} {})", paren_lin(a), op.symbol(), paren_lin(b)),
        }
    }
}

fn paren_lin(e: &LinExpr) -> String {
    if e.terms.len() + usize::from(!e.constant.is_zero()) > 1 {
        format!("({e})")
    } else {
        e.to_string()
    }
}

/// `sum(coeff * atom) + constant`
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct LinExpr {
    pub terms: BTreeMap<Atom, Q>,
    pub constant: Q,
}

impl LinExpr {
    pub fn constant(c: Q) -> LinExpr {
        LinExpr { terms: BTreeMap::new(), constant: c }
    }

    pub fn atom(a: Atom) -> LinExpr {
        let mut terms = BTreeMap::new();
        terms.insert(a, Q::one());
        LinExpr { terms, constant: Q::zero() }
    }

    pub fn as_constant(&self) -> Option<&Q> {
        if self.terms.is_empty() {
            Some(&self.constant)
        } else {
            None
        }
    }

    pub fn add(&self, other: &LinExpr) -> LinExpr {
        let mut out = self.clone();
        for (a, c) in &other.terms {
            let e = out.terms.entry(a.clone()).or_insert_with(Q::zero);
            *e += c;
        }
        out.terms.retain(|_, c| !c.is_zero());
        out.constant += &other.constant;
        out
    }

    pub fn scale(&self, k: &Q) -> LinExpr {
        if k.is_zero() {
            return LinExpr::default();
        }
        LinExpr {
            terms: self.terms.iter().map(|(a, c)| (a.clone(), c * k)).collect(),
            constant: &self.constant * k,
        }
    }

    pub fn neg(&self) -> LinExpr {
        self.scale(&-Q::one())
    }

    pub fn sub(&self, other: &LinExpr) -> LinExpr {
        self.add(&other.neg())
    }

    pub fn atoms(&self) -> impl Iterator<Item = &Atom> {
        self.terms.keys()
    }

    pub fn mentions_app(&self, pred: &dyn Fn(&str) -> bool) -> bool {
        self.terms.keys().any(|a| a.mentions_app(pred))
    }

    fn write_terms(&self, f: &mut fmt::Formatter<'_>, negate: bool) -> fmt::Result {
        for (i, (a, c)) in self.terms.iter().enumerate() {
            let c = if negate { -c.clone() } else { c.clone() };
            let neg = c.is_negative();
            let mag = c.abs();
            match (i, neg) {
                (0, true) => write!(f, "-")?,
                (0, false) => {}
                (_, true) => write!(f, " - ")?,
                (_, false) => write!(f, " + ")?,
            }
            if mag.is_one() {
                write!(f, "{a}")?;
            } else {
                write!(f, "{} * {a}", num_text(&mag))?;
            }
        }
        Ok(())
    }
}

pub fn num_text(q: &Q) -> String {
    if q.is_integer() {
        q.numer().to_string()
    } else {
        rat_literal(q)
    }
}

impl fmt::Display for LinExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "{}", num_text(&self.constant));
        }
        self.write_terms(f, false)?;
        if self.constant.is_positive() {
            write!(f, " + {}", num_text(&self.constant))?;
        } else if self.constant.is_negative() {
            write!(f, " - {}", num_text(&-self.constant.clone()))?;
        }
        Ok(())
    }
}

/// Constructor table of a variant (or list) type, carried by constructor tests.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct AdtSig {
    pub ty: Ty,
    pub ctors: Vec<String>,
    pub arities: Vec<usize>,
    /// Constructor chosen for unconstrained atoms.
    pub base: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum CmpOp {
    Le,
    Lt,
    Eq,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Formula {
    Const(bool),
    IsCtor(Atom, Arc<AdtSig>, usize),
    Var(Atom),
    /// `lin op 0`, kept normalized by [`Formula::cmp`].
    Cmp(CmpOp, NumKind, LinExpr),
    Not(Box<Formula>),
    And(Vec<Formula>),
    Or(Vec<Formula>),
}

pub const TRUE: Formula = Formula::Const(true);
pub const FALSE: Formula = Formula::Const(false);

impl Formula {
    /// Builds a normalized comparison `lin op 0`.
    pub fn cmp(op: CmpOp, kind: NumKind, lin: LinExpr) -> Formula {
        let mut lin = lin;
        lin.terms.retain(|_, c| !c.is_zero());
        if let Some(c) = lin.as_constant() {
            return Formula::Const(match op {
                CmpOp::Le => !c.is_positive(),
                CmpOp::Lt => c.is_negative(),
                CmpOp::Eq => c.is_zero(),
            });
        }
        let mut l = lin.constant.denom().clone();
        for c in lin.terms.values() {
            l = l.lcm(c.denom());
        }
        let lq = Q::from_integer(l);
        let mut lin = lin.scale(&lq);
        let mut g = BigInt::zero();
        for c in lin.terms.values() {
            g = g.gcd(c.numer());
        }
        let mut op = op;
        if kind == NumKind::Int {
            if op == CmpOp::Lt {
                lin.constant += Q::one();
                op = CmpOp::Le;
            }
            let gq = Q::from_integer(g.clone());
            match op {
                CmpOp::Eq => {
                    if !(lin.constant.numer() % &g).is_zero() {
                        return FALSE;
                    }
                    lin = lin.scale(&(Q::one() / &gq));
                }
                _ => {
                    let k = (&lin.constant / &gq).ceil();
                    lin.constant = Q::zero();
                    lin = lin.scale(&(Q::one() / &gq));
                    lin.constant = k;
                }
            }
        } else {
            let g = g.gcd(lin.constant.numer());
            if !g.is_zero() {
                lin = lin.scale(&(Q::one() / Q::from_integer(g)));
            }
        }
        if op == CmpOp::Eq && lin.terms.values().next().is_some_and(|c| c.is_negative()) {
            lin = lin.neg();
        }
        Formula::Cmp(op, kind, lin)
    }

    pub fn num_rel(rel: crate::lang::ast::BinOp, kind: NumKind, a: &LinExpr, b: &LinExpr) -> Formula {
        use crate::lang::ast::BinOp::*;
        match rel {
            Lt => Formula::cmp(CmpOp::Lt, kind, a.sub(b)),
            Le => Formula::cmp(CmpOp::Le, kind, a.sub(b)),
            Gt => Formula::cmp(CmpOp::Lt, kind, b.sub(a)),
            Ge => Formula::cmp(CmpOp::Le, kind, b.sub(a)),
            Eq => Formula::cmp(CmpOp::Eq, kind, a.sub(b)),
            Neq => Formula::not(Formula::cmp(CmpOp::Eq, kind, a.sub(b))),
            _ => unreachable!("not a comparison"),
        }
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(f: Formula) -> Formula {
        match f {
            Formula::Const(b) => Formula::Const(!b),
            Formula::Not(x) => *x,
            Formula::Cmp(CmpOp::Le, k, e) => Formula::cmp(CmpOp::Lt, k, e.neg()),
            Formula::Cmp(CmpOp::Lt, k, e) => Formula::cmp(CmpOp::Le, k, e.neg()),
            other => Formula::Not(Box::new(other)),
        }
    }

    pub fn and(items: Vec<Formula>) -> Formula {
        let mut out: Vec<Formula> = Vec::new();
        for f in items {
            match f {
                Formula::Const(true) => {}
                Formula::Const(false) => return FALSE,
                Formula::And(xs) => {
                    for x in xs {
                        if !out.contains(&x) {
                            out.push(x);
                        }
                    }
                }
                x => {
                    if !out.contains(&x) {
                        out.push(x);
                    }
                }
            }
        }
        match out.len() {
            0 => TRUE,
            1 => out.pop().unwrap(),
            _ => Formula::And(out),
        }
    }

    pub fn or(items: Vec<Formula>) -> Formula {
        let mut out: Vec<Formula> = Vec::new();
        for f in items {
            match f {
                Formula::Const(false) => {}
                Formula::Const(true) => return TRUE,
                Formula::Or(xs) => {
                    for x in xs {
                        if !out.contains(&x) {
                            out.push(x);
                        }
                    }
                }
                x => {
                    if !out.contains(&x) {
                        out.push(x);
                    }
                }
            }
        }
        match out.len() {
            0 => FALSE,
            1 => out.pop().unwrap(),
            _ => Formula::Or(out),
        }
    }

    pub fn implies(a: Formula, b: Formula) -> Formula {
        Formula::or(vec![Formula::not(a), b])
    }

    pub fn iff(a: Formula, b: Formula) -> Formula {
        match (&a, &b) {
            (Formula::Const(x), _) => if *x { b } else { Formula::not(b) },
            (_, Formula::Const(y)) => if *y { a } else { Formula::not(a) },
            _ if a == b => TRUE,
            _ => Formula::or(vec![
                Formula::and(vec![a.clone(), b.clone()]),
                Formula::and(vec![Formula::not(a), Formula::not(b)]),
            ]),
        }
    }

    pub fn as_const(&self) -> Option<bool> {
        match self {
            Formula::Const(b) => Some(*b),
            _ => None,
        }
    }

    pub fn for_each_atom(&self, f: &mut dyn FnMut(&Atom)) {
        match self {
            Formula::Const(_) => {}
            Formula::IsCtor(a, _, _) | Formula::Var(a) => f(a),
            Formula::Cmp(_, _, e) => e.atoms().for_each(&mut *f),
            Formula::Not(x) => x.for_each_atom(f),
            Formula::And(xs) | Formula::Or(xs) => xs.iter().for_each(|x| x.for_each_atom(f)),
        }
    }

    pub fn mentions_app(&self, pred: &dyn Fn(&str) -> bool) -> bool {
        let mut found = false;
        self.for_each_atom(&mut |a| found |= a.mentions_app(pred));
        found
    }

    pub fn is_nonlinear(&self) -> bool {
        let mut found = false;
        self.for_each_atom(&mut |a| found |= a.is_nonlinear());
        found
    }

    fn is_compound(&self) -> bool {
        matches!(self, Formula::And(_) | Formula::Or(_))
    }

    /// Sort class: constructor tests, then boolean atoms, then arithmetic.
    pub fn class(&self) -> u8 {
        match self {
            Formula::Const(_) => 0,
            Formula::IsCtor(..) => 1,
            Formula::Not(x) if matches!(**x, Formula::IsCtor(..)) => 1,
            Formula::Var(_) => 2,
            Formula::Not(x) if matches!(**x, Formula::Var(_)) => 2,
            Formula::Cmp(..) => 3,
            Formula::Not(x) if matches!(**x, Formula::Cmp(..)) => 3,
            _ => 4,
        }
    }
}

fn write_cmp(f: &mut fmt::Formatter<'_>, op: CmpOp, e: &LinExpr, negated: bool) -> fmt::Result {
    let lead_neg = e.terms.values().next().is_some_and(|c| c.is_negative());
    let flip = lead_neg && op != CmpOp::Eq;
    let sym = match (op, flip, negated) {
        (CmpOp::Le, false, _) => "<=",
        (CmpOp::Le, true, _) => ">=",
        (CmpOp::Lt, false, _) => "<",
        (CmpOp::Lt, true, _) => ">",
        (CmpOp::Eq, _, false) => "=",
        (CmpOp::Eq, _, true) => "<>",
    };
    e.write_terms(f, flip)?;
    let rhs = if flip { e.constant.clone() } else { -e.constant.clone() };
    if rhs.is_negative() {
        write!(f, " {sym} -{}", num_text(&-rhs))
    } else {
        write!(f, " {sym} {}", num_text(&rhs))
    }
}

fn ctor_pattern(sig: &AdtSig, i: usize) -> String {
    let c = &sig.ctors[i];
    if c == NIL {
        return "[]".into();
    }
    if c == CONS {
        return "_ :: _".into();
    }
    match sig.arities[i] {
        0 => c.clone(),
        1 => format!("{c} _"),
        n => format!("{c} ({})", vec!["_"; n].join(", ")),
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Formula::Const(b) => write!(f, "{b}"),
            Formula::IsCtor(a, sig, i) => write!(f, "{a} = {}", ctor_pattern(sig, *i)),
            Formula::Var(a) => write!(f, "{a}"),
            Formula::Cmp(op, _, e) => write_cmp(f, *op, e, false),
            Formula::Not(x) => match &**x {
                Formula::Cmp(CmpOp::Eq, _, e) => write_cmp(f, CmpOp::Eq, e, true),
                x => write!(f, "not ({x})"),
            },
            Formula::And(xs) | Formula::Or(xs) => {
                let sep = if matches!(self, Formula::And(_)) { " && " } else { " || " };
                for (i, x) in xs.iter().enumerate() {
                    if i > 0 {
                        write!(f, "{sep}")?;
                    }
                    if x.is_compound() {
                        write!(f, "({x})")?;
                    } else {
                        write!(f, "{x}")?;
                    }
                }
                Ok(())
            }
        }
    }
}

/// A symbolic value produced by the symbolic evaluator.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SVal {
    Num(NumKind, LinExpr),
    Bool(Formula),
    /// Variant or list value whose constructor is not yet known.
    Adt(Atom, Ty),
    /// Known constructor (by index) of a variant or list type.
    Ctor(Ty, usize, String, Vec<SVal>),
    Record(String, Vec<(String, SVal)>),
    Tuple(Vec<SVal>),
}

impl SVal {
    pub fn int(n: i64) -> SVal {
        SVal::Num(NumKind::Int, LinExpr::constant(Q::from_integer(BigInt::from(n))))
    }

    pub fn is_ground(&self) -> bool {
        match self {
            SVal::Num(_, e) => e.terms.is_empty(),
            SVal::Bool(f) => f.as_const().is_some(),
            SVal::Adt(..) => false,
            SVal::Ctor(_, _, _, xs) | SVal::Tuple(xs) => xs.iter().all(SVal::is_ground),
            SVal::Record(_, fs) => fs.iter().all(|(_, v)| v.is_ground()),
        }
    }

    pub fn mentions_app(&self, pred: &dyn Fn(&str) -> bool) -> bool {
        match self {
            SVal::Num(_, e) => e.mentions_app(pred),
            SVal::Bool(f) => f.mentions_app(pred),
            SVal::Adt(a, _) => a.mentions_app(pred),
            SVal::Ctor(_, _, _, xs) | SVal::Tuple(xs) => xs.iter().any(|x| x.mentions_app(pred)),
            SVal::Record(_, fs) => fs.iter().any(|(_, v)| v.mentions_app(pred)),
        }
    }

    pub fn is_nonlinear(&self) -> bool {
        match self {
            SVal::Num(_, e) => e.atoms().any(Atom::is_nonlinear),
            SVal::Bool(f) => f.is_nonlinear(),
            SVal::Adt(a, _) => a.is_nonlinear(),
            SVal::Ctor(_, _, _, xs) | SVal::Tuple(xs) => xs.iter().any(SVal::is_nonlinear),
            SVal::Record(_, fs) => fs.iter().any(|(_, v)| v.is_nonlinear()),
        }
    }

    pub fn for_each_atom(&self, f: &mut dyn FnMut(&Atom)) {
        match self {
            SVal::Num(_, e) => e.atoms().for_each(&mut *f),
            SVal::Bool(x) => x.for_each_atom(f),
            SVal::Adt(a, _) => f(a),
            SVal::Ctor(_, _, _, xs) | SVal::Tuple(xs) => xs.iter().for_each(|x| x.for_each_atom(f)),
            SVal::Record(_, fs) => fs.iter().for_each(|(_, v)| v.for_each_atom(f)),
        }
    }
}

impl fmt::Display for SVal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SVal::Num(_, e) => write!(f, "{e}"),
            SVal::Bool(x) => write!(f, "{x}"),
            SVal::Adt(a, _) => write!(f, "{a}"),
            SVal::Ctor(Ty::List(_), _, _, _) => {
                let mut items = Vec::new();
                let mut cur = self;
                loop {
                    match cur {
                        SVal::Ctor(Ty::List(_), 1, _, xs) => {
                            items.push(xs[0].to_string());
                            cur = &xs[1];
                        }
                        SVal::Ctor(Ty::List(_), _, _, _) => {
                            return write!(f, "[{}]", items.join("; "));
                        }
                        other => {
                            for it in &items {
                                write!(f, "{it} :: ")?;
                            }
                            return write!(f, "{other}");
                        }
                    }
                }
            }
            SVal::Ctor(_, _, c, xs) => match xs.len() {
                0 => write!(f, "{c}"),
                _ => {
                    let parts: Vec<String> = xs.iter().map(|x| x.to_string()).collect();
                    write!(f, "{c} ({})", parts.join(", "))
                }
            },
            SVal::Record(_, fs) => {
                let parts: Vec<String> = fs.iter().map(|(n, v)| format!("{n} = {v}")).collect();
                write!(f, "{{ {} }}", parts.join("; "))
            }
            SVal::Tuple(xs) => {
                let parts: Vec<String> = xs.iter().map(|x| x.to_string()).collect();
                write!(f, "({})", parts.join(", "))
            }
        }
    }
}
