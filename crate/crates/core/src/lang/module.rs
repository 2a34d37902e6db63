//! Typed intermediate representation produced by admission. Every node
//! carries its type; the evaluator and the symbolic engine both walk it.

use super::ast::{BinOp, DirectiveKind, Span, Ty, UnOp, CONS, NIL};
use num_bigint::BigInt;
use num_rational::BigRational;
use std::collections::BTreeMap;

#[derive(Debug, Clone, PartialEq)]
pub struct TExpr {
    pub kind: TKind,
    pub ty: Ty,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq)]
pub enum TKind {
    Int(BigInt),
    Rat(BigRational),
    Bool(bool),
    Var(String),
    Unary(UnOp, Box<TExpr>),
    Binary(BinOp, Box<TExpr>, Box<TExpr>),
    If(Box<TExpr>, Box<TExpr>, Box<TExpr>),
    Match(Box<TExpr>, Vec<TArm>),
    Let(String, Box<TExpr>, Box<TExpr>),
    /// Call of a fully applied function, by qualified name.
    Call(String, Vec<TExpr>),
    /// Record construction; fields in declaration order.
    Record(String, Vec<TExpr>),
    Field(Box<TExpr>, usize),
    /// Constructor by index into the type's constructor list.
    Ctor(usize, Vec<TExpr>),
    Tuple(Vec<TExpr>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct TArm {
    pub pattern: TPattern,
    pub body: TExpr,
}

#[derive(Debug, Clone, PartialEq)]
pub enum TPattern {
    Wildcard,
    Ctor(usize, Vec<Option<String>>),
    Tuple(Vec<Option<String>>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct CtorInfo {
    pub name: String,
    pub fields: Vec<Ty>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum TypeKind {
    Record(Vec<(String, Ty)>),
    Variant(Vec<CtorInfo>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct TypeInfo {
    pub qname: String,
    pub name: String,
    pub kind: TypeKind,
    /// Index of the first constructor whose payload does not mention the type
    /// itself; used for default values.
    pub base_ctor: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FunInfo {
    pub qname: String,
    pub name: String,
    pub params: Vec<(String, Ty)>,
    pub ret: Ty,
    /// `None` for opaque declarations.
    pub body: Option<TExpr>,
    pub recursive: bool,
}

impl FunInfo {
    pub fn is_opaque(&self) -> bool {
        self.body.is_none()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AxiomInfo {
    pub qname: String,
    pub params: Vec<(String, Ty)>,
    pub body: TExpr,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TDirective {
    pub kind: DirectiveKind,
    pub target: String,
    pub assuming: Option<String>,
    pub basis: Vec<String>,
}

/// Names visible without qualification.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Scope {
    pub functions: BTreeMap<String, String>,
    pub types: BTreeMap<String, String>,
    pub ctors: BTreeMap<String, (String, usize)>,
}

/// An admitted module together with everything it depends on.
#[derive(Debug, Clone, PartialEq)]
pub struct Module {
    pub name: String,
    /// Content hash over the printed program and its dependencies' hashes.
    pub hash: String,
    pub types: BTreeMap<String, TypeInfo>,
    pub functions: BTreeMap<String, FunInfo>,
    pub axioms: Vec<AxiomInfo>,
    pub directives: Vec<TDirective>,
    pub scope: Scope,
    /// Qualified names declared by this module itself, in source order.
    pub own: Vec<String>,
}

pub fn qualify(module: &str, name: &str) -> String {
    format!("{module}::{name}")
}

impl Module {
    /// Looks up a function by bare (in-scope) or qualified name.
    pub fn function(&self, name: &str) -> Option<&FunInfo> {
        if let Some(q) = self.scope.functions.get(name) {
            return self.functions.get(q);
        }
        self.functions.get(name)
    }

    pub fn type_info(&self, qname: &str) -> Option<&TypeInfo> {
        self.types.get(qname)
    }

    /// Constructor list for a variant or list type.
    pub fn ctors_of(&self, ty: &Ty) -> Option<Vec<CtorInfo>> {
        match ty {
            Ty::List(e) => Some(vec![
                CtorInfo { name: NIL.into(), fields: vec![] },
                CtorInfo { name: CONS.into(), fields: vec![(**e).clone(), ty.clone()] },
            ]),
            Ty::Named(q) => match &self.types.get(q)?.kind {
                TypeKind::Variant(cs) => Some(cs.clone()),
                TypeKind::Record(_) => None,
            },
            _ => None,
        }
    }

    pub fn record_fields(&self, ty: &Ty) -> Option<&[(String, Ty)]> {
        match ty {
            Ty::Named(q) => match &self.types.get(q)?.kind {
                TypeKind::Record(fs) => Some(fs),
                TypeKind::Variant(_) => None,
            },
            _ => None,
        }
    }

    pub fn base_ctor(&self, ty: &Ty) -> usize {
        match ty {
            Ty::Named(q) => self.types.get(q).map(|t| t.base_ctor).unwrap_or(0),
            _ => 0,
        }
    }

    /// Whether values of `ty` can be arbitrarily deep.
    pub fn is_recursive_type(&self, ty: &Ty) -> bool {
        fn walk(m: &Module, ty: &Ty, target: &str, seen: &mut Vec<String>) -> bool {
            match ty {
                Ty::List(_) => true,
                Ty::Tuple(ts) => ts.iter().any(|t| walk(m, t, target, seen)),
                Ty::Named(q) => {
                    if q == target && !seen.is_empty() {
                        return true;
                    }
                    if seen.contains(q) {
                        return false;
                    }
                    seen.push(q.clone());
                    let r = match m.types.get(q).map(|t| &t.kind) {
                        Some(TypeKind::Record(fs)) => fs.iter().any(|(_, t)| walk(m, t, target, seen)),
                        Some(TypeKind::Variant(cs)) => {
                            cs.iter().any(|c| c.fields.iter().any(|t| walk(m, t, target, seen)))
                        }
                        None => false,
                    };
                    r
                }
                _ => false,
            }
        }
        match ty {
            Ty::List(_) => true,
            Ty::Named(q) => walk(self, ty, q, &mut Vec::new()),
            Ty::Tuple(ts) => ts.iter().any(|t| self.is_recursive_type(t)),
            _ => false,
        }
    }

    /// Opaque functions reachable from this module's own declarations.
    pub fn opaque_symbols(&self) -> Vec<String> {
        let mut out = std::collections::BTreeSet::new();
        let mut seen = std::collections::BTreeSet::new();
        let mut stack: Vec<String> = Vec::new();
        for q in &self.own {
            if let Some(f) = self.functions.get(q) {
                if f.is_opaque() {
                    out.insert(q.clone());
                } else {
                    stack.push(q.clone());
                }
            }
        }
        for a in &self.axioms {
            if self.own.contains(&a.qname) {
                collect_calls(&a.body, &mut stack);
            }
        }
        while let Some(q) = stack.pop() {
            if !seen.insert(q.clone()) {
                continue;
            }
            let Some(f) = self.functions.get(&q) else { continue };
            match &f.body {
                None => {
                    out.insert(q);
                }
                Some(b) => collect_calls(b, &mut stack),
            }
        }
        out.into_iter().collect()
    }
}

pub fn collect_calls(e: &TExpr, out: &mut Vec<String>) {
    visit(e, &mut |x| {
        if let TKind::Call(f, _) = &x.kind {
            out.push(f.clone());
        }
    });
}

pub fn visit(e: &TExpr, f: &mut dyn FnMut(&TExpr)) {
    f(e);
    match &e.kind {
        TKind::Int(_) | TKind::Rat(_) | TKind::Bool(_) | TKind::Var(_) => {}
        TKind::Unary(_, x) | TKind::Field(x, _) => visit(x, f),
        TKind::Binary(_, a, b) | TKind::Let(_, a, b) => {
            visit(a, f);
            visit(b, f);
        }
        TKind::If(a, b, c) => {
            visit(a, f);
            visit(b, f);
            visit(c, f);
        }
        TKind::Match(s, arms) => {
            visit(s, f);
            for a in arms {
                visit(&a.body, f);
            }
        }
        TKind::Call(_, xs) | TKind::Record(_, xs) | TKind::Ctor(_, xs) | TKind::Tuple(xs) => {
            for x in xs {
                visit(x, f);
            }
        }
    }
}
