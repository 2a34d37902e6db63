//! Name resolution and typechecking ("admission").

use super::ast::*;
use super::module::*;
use super::pretty::print_program;
use crate::util::sha256_hex;
use serde::Serialize;
use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::sync::Arc;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum AdmissionStatus {
    AdmittedTransparent,
    AdmittedWithOpaqueness,
    ErrorDuringValidation,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Error,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Diagnostic {
    pub file: String,
    pub line: u32,
    pub col: u32,
    pub severity: Severity,
    pub message: String,
}

impl std::fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}:{}:{}: error: {}", self.file, self.line, self.col, self.message)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct AdmissionReport {
    pub module: String,
    pub status: AdmissionStatus,
    pub diagnostics: Vec<Diagnostic>,
    pub opaque: Vec<String>,
    #[serde(skip)]
    pub admitted: Option<Arc<Module>>,
}

impl AdmissionReport {
    pub fn is_admitted(&self) -> bool {
        self.status != AdmissionStatus::ErrorDuringValidation
    }
}

/// Already-admitted modules available to imports.
#[derive(Debug, Clone, Default)]
pub struct DependencyContext {
    pub modules: Vec<Arc<Module>>,
}

impl DependencyContext {
    pub fn new(modules: Vec<Arc<Module>>) -> Self {
        DependencyContext { modules }
    }

    pub fn find(&self, name: &str) -> Option<&Arc<Module>> {
        self.modules.iter().find(|m| m.name == name)
    }
}

/// Module name for a source path: `utils/helpers.mml` becomes `utils.helpers`.
pub fn module_name(file: &str) -> String {
    let f = file.strip_suffix(".mml").unwrap_or(file);
    f.trim_start_matches("./").replace(['/', '\\'], ".")
}

pub fn admit(program: &Program, ctx: &DependencyContext) -> AdmissionReport {
    let mut c = Checker::new(program, ctx, false);
    c.run();
    let module_name = c.m.name.clone();
    if !c.diags.is_empty() {
        return AdmissionReport {
            module: module_name,
            status: AdmissionStatus::ErrorDuringValidation,
            diagnostics: c.diags,
            opaque: vec![],
            admitted: None,
        };
    }
    let opaque: Vec<String> = c.m.opaque_symbols().iter().map(|q| bare(q).to_string()).collect();
    let status = if opaque.is_empty() {
        AdmissionStatus::AdmittedTransparent
    } else {
        AdmissionStatus::AdmittedWithOpaqueness
    };
    AdmissionReport { module: module_name, status, diagnostics: vec![], opaque, admitted: Some(Arc::new(c.m)) }
}

/// Admits only the type and function signatures of a program, treating every
/// function as opaque. Declarations that fail to resolve are skipped.
pub fn admit_signatures(program: &Program, ctx: &DependencyContext) -> Module {
    let mut c = Checker::new(program, ctx, true);
    c.run();
    c.m
}

struct TErr {
    span: Span,
    msg: String,
    needs_type: bool,
}

fn err<T>(span: Span, msg: impl Into<String>) -> Result<T, TErr> {
    Err(TErr { span, msg: msg.into(), needs_type: false })
}

type TResult<T> = Result<T, TErr>;
/// A checked pattern, its bindings and the source arm.
type TypedArm<'a> = (TPattern, Vec<(String, Ty)>, &'a Arm);

struct Checker<'a> {
    program: &'a Program,
    ctx: &'a DependencyContext,
    signatures_only: bool,
    m: Module,
    diags: Vec<Diagnostic>,
    declared_later: BTreeSet<String>,
}

impl<'a> Checker<'a> {
    fn new(program: &'a Program, ctx: &'a DependencyContext, signatures_only: bool) -> Self {
        let name = module_name(&program.file);
        let mut deps: Vec<&str> = ctx.modules.iter().map(|m| m.hash.as_str()).collect();
        deps.sort();
        let hash = sha256_hex(format!("{}\n{}", print_program(program), deps.join("\n")).as_bytes());
        Checker {
            program,
            ctx,
            signatures_only,
            m: Module {
                name,
                hash,
                types: BTreeMap::new(),
                functions: BTreeMap::new(),
                axioms: vec![],
                directives: vec![],
                scope: Scope::default(),
                own: vec![],
            },
            diags: vec![],
            declared_later: BTreeSet::new(),
        }
    }

    fn diag(&mut self, span: Span, msg: impl Into<String>) {
        if self.signatures_only {
            return;
        }
        self.diags.push(Diagnostic {
            file: self.program.file.clone(),
            line: span.line,
            col: span.col,
            severity: Severity::Error,
            message: msg.into(),
        });
    }

    fn q(&self, name: &str) -> String {
        qualify(&self.m.name, name)
    }

    fn run(&mut self) {
        self.check_duplicates();
        for d in &self.program.decls {
            if let Some(n) = d.name() {
                self.declared_later.insert(n.to_string());
            }
        }
        let mut directives = Vec::new();
        for d in &self.program.decls {
            if let Some(n) = d.name() {
                self.declared_later.remove(n);
            }
            match &d.kind {
                DeclKind::Type(t) => self.type_decl(t, d.span),
                DeclKind::Fun(f) => self.fun_decl(f, d.span),
                DeclKind::Opaque(o) => self.opaque_decl(o, d.span),
                DeclKind::Axiom(a) => self.axiom_decl(a, d.span),
                DeclKind::Import(i) => self.import_decl(i, d.span),
                DeclKind::Directive(dir) => directives.push((dir, d.span)),
            }
        }
        for (dir, span) in directives {
            self.directive(dir, span);
        }
    }

    fn check_duplicates(&mut self) {
        let mut values: HashMap<&str, ()> = HashMap::new();
        let mut types: HashMap<&str, ()> = HashMap::new();
        let mut axioms: HashMap<&str, ()> = HashMap::new();
        let mut ctors: HashMap<&str, ()> = HashMap::new();
        let mut dups = Vec::new();
        for d in &self.program.decls {
            match &d.kind {
                DeclKind::Type(t) => {
                    if types.insert(&t.name, ()).is_some() {
                        dups.push((d.span, format!("duplicate type {}", t.name)));
                    }
                    if let TypeBody::Variant(cs) = &t.body {
                        for c in cs {
                            if ctors.insert(&c.name, ()).is_some() {
                                dups.push((d.span, format!("duplicate constructor {}", c.name)));
                            }
                        }
                    }
                }
                DeclKind::Fun(FunDef { name, .. }) | DeclKind::Opaque(OpaqueDecl { name, .. }) => {
                    if values.insert(name, ()).is_some() {
                        dups.push((d.span, format!("duplicate function {name}")));
                    }
                }
                DeclKind::Axiom(a) => {
                    if axioms.insert(&a.name, ()).is_some() {
                        dups.push((d.span, format!("duplicate axiom {}", a.name)));
                    }
                }
                DeclKind::Import(_) | DeclKind::Directive(_) => {}
            }
        }
        for (s, m) in dups {
            self.diag(s, m);
        }
    }

    fn resolve_ty(&self, ty: &Ty, span: Span) -> TResult<Ty> {
        Ok(match ty {
            Ty::Int | Ty::Rat | Ty::Bool => ty.clone(),
            Ty::Named(n) => match self.m.scope.types.get(n) {
                Some(q) => Ty::Named(q.clone()),
                None if self.declared_later.contains(n) => {
                    return err(span, format!("type {n} is used before its declaration"))
                }
                None => return err(span, format!("unbound type {n}")),
            },
            Ty::Tuple(ts) => Ty::Tuple(ts.iter().map(|t| self.resolve_ty(t, span)).collect::<TResult<_>>()?),
            Ty::List(t) => Ty::list(self.resolve_ty(t, span)?),
        })
    }

    fn type_decl(&mut self, t: &TypeDef, span: Span) {
        let qname = self.q(&t.name);
        if self.m.scope.types.contains_key(&t.name) && self.m.types.contains_key(&qname) {
            return;
        }
        self.m.scope.types.insert(t.name.clone(), qname.clone());
        let kind = match &t.body {
            TypeBody::Record(fields) => {
                let mut seen = BTreeSet::new();
                let mut out = Vec::new();
                for (f, ty) in fields {
                    if !seen.insert(f.clone()) {
                        self.diag(span, format!("duplicate field {f} in type {}", t.name));
                    }
                    match self.resolve_ty(ty, span) {
                        Ok(r) => out.push((f.clone(), r)),
                        Err(e) => {
                            self.diag(e.span, e.msg);
                            self.m.scope.types.remove(&t.name);
                            return;
                        }
                    }
                }
                TypeKind::Record(out)
            }
            TypeBody::Variant(ctors) => {
                let mut out = Vec::new();
                for c in ctors {
                    let mut fields = Vec::new();
                    for ty in &c.fields {
                        match self.resolve_ty(ty, span) {
                            Ok(r) => fields.push(r),
                            Err(e) => {
                                self.diag(e.span, e.msg);
                                self.m.scope.types.remove(&t.name);
                                return;
                            }
                        }
                    }
                    out.push(CtorInfo { name: c.name.clone(), fields });
                }
                TypeKind::Variant(out)
            }
        };
        // Recursion must pass through a variant constructor or a list.
        fn through_products(m: &Module, ty: &Ty, target: &str) -> bool {
            match ty {
                Ty::Named(q) if q == target => true,
                Ty::Named(q) => match m.types.get(q).map(|t| &t.kind) {
                    Some(TypeKind::Record(fs)) => fs.iter().any(|(_, t)| through_products(m, t, target)),
                    _ => false,
                },
                Ty::Tuple(ts) => ts.iter().any(|t| through_products(m, t, target)),
                _ => false,
            }
        }
        let base_ctor = match &kind {
            TypeKind::Record(fs) => {
                if fs.iter().any(|(_, ty)| through_products(&self.m, ty, &qname)) {
                    self.diag(span, format!("type {} is recursive through records or tuples", t.name));
                    self.m.scope.types.remove(&t.name);
                    return;
                }
                0
            }
            TypeKind::Variant(cs) => {
                match cs.iter().position(|c| c.fields.iter().all(|ty| !mentions(ty, &qname))) {
                    Some(i) => i,
                    None => {
                        self.diag(span, format!("type {} has no finite values", t.name));
                        self.m.scope.types.remove(&t.name);
                        return;
                    }
                }
            }
        };
        if let TypeKind::Variant(cs) = &kind {
            for (i, c) in cs.iter().enumerate() {
                self.m.scope.ctors.insert(c.name.clone(), (qname.clone(), i));
            }
        }
        self.m.types.insert(qname.clone(), TypeInfo { qname: qname.clone(), name: t.name.clone(), kind, base_ctor });
        self.m.own.push(qname);
    }

    fn params(&mut self, params: &[(String, Ty)], span: Span) -> Option<Vec<(String, Ty)>> {
        let mut out: Vec<(String, Ty)> = Vec::new();
        for (n, t) in params {
            if out.iter().any(|(m, _)| m == n) {
                self.diag(span, format!("duplicate parameter {n}"));
                return None;
            }
            match self.resolve_ty(t, span) {
                Ok(r) => out.push((n.clone(), r)),
                Err(e) => {
                    self.diag(e.span, e.msg);
                    return None;
                }
            }
        }
        Some(out)
    }

    fn register_fn(&mut self, name: &str, params: Vec<(String, Ty)>, ret: Ty, body: Option<TExpr>, recursive: bool) {
        let qname = self.q(name);
        self.m.scope.functions.insert(name.to_string(), qname.clone());
        if !self.m.own.contains(&qname) {
            self.m.own.push(qname.clone());
        }
        self.m.functions.insert(qname.clone(), FunInfo { qname, name: name.to_string(), params, ret, body, recursive });
    }

    fn fun_decl(&mut self, f: &FunDef, span: Span) {
        if self.m.scope.functions.get(&f.name).is_some_and(|q| *q == self.q(&f.name)) {
            return;
        }
        let Some(params) = self.params(&f.params, span) else { return };
        let ret = match &f.ret {
            Some(r) => match self.resolve_ty(r, span) {
                Ok(r) => Some(r),
                Err(e) => {
                    self.diag(e.span, e.msg);
                    return;
                }
            },
            None => None,
        };
        if f.recursive {
            let Some(r) = ret.clone() else {
                self.diag(span, format!("recursive function {} needs a return type annotation", f.name));
                return;
            };
            self.register_fn(&f.name, params.clone(), r, None, true);
        }
        let mut env = params.clone();
        match self.tc(&f.body, &mut env, ret.as_ref()) {
            Ok(body) => {
                let ty = body.ty.clone();
                let body = if self.signatures_only { None } else { Some(body) };
                self.register_fn(&f.name, params, ty, body, f.recursive);
            }
            Err(e) => {
                self.diag(e.span, e.msg);
                if let Some(r) = ret {
                    self.register_fn(&f.name, params, r, None, f.recursive);
                }
            }
        }
    }

    fn opaque_decl(&mut self, o: &OpaqueDecl, span: Span) {
        let mut params = Vec::new();
        for (i, t) in o.params.iter().enumerate() {
            match self.resolve_ty(t, span) {
                Ok(r) => params.push((format!("x{}", i + 1), r)),
                Err(e) => return self.diag(e.span, e.msg),
            }
        }
        match self.resolve_ty(&o.ret, span) {
            Ok(r) => self.register_fn(&o.name, params, r, None, false),
            Err(e) => self.diag(e.span, e.msg),
        }
    }

    fn axiom_decl(&mut self, a: &AxiomDecl, span: Span) {
        let Some(params) = self.params(&a.params, span) else { return };
        let mut env = params.clone();
        match self.tc(&a.body, &mut env, Some(&Ty::Bool)) {
            Ok(body) => {
                let qname = self.q(&a.name);
                self.m.own.push(qname.clone());
                self.m.axioms.push(AxiomInfo { qname, params, body });
            }
            Err(e) => self.diag(e.span, e.msg),
        }
    }

    fn import_decl(&mut self, i: &ImportDecl, span: Span) {
        let Some(dep) = self.ctx.find(&i.module).cloned() else {
            self.diag(span, format!("unknown module {}", i.module));
            return;
        };
        for (q, t) in &dep.types {
            self.m.types.entry(q.clone()).or_insert_with(|| t.clone());
        }
        for (q, f) in &dep.functions {
            self.m.functions.entry(q.clone()).or_insert_with(|| f.clone());
        }
        for a in &dep.axioms {
            if !self.m.axioms.iter().any(|b| b.qname == a.qname) {
                self.m.axioms.push(a.clone());
            }
        }
        for name in &i.names {
            if let Some(q) = dep.scope.functions.get(name) {
                self.m.scope.functions.insert(name.clone(), q.clone());
            } else if let Some(q) = dep.scope.types.get(name) {
                self.m.scope.types.insert(name.clone(), q.clone());
                if let Some(TypeKind::Variant(cs)) = dep.types.get(q).map(|t| &t.kind) {
                    for (k, c) in cs.iter().enumerate() {
                        self.m.scope.ctors.insert(c.name.clone(), (q.clone(), k));
                    }
                }
            } else {
                self.diag(span, format!("module {} has no symbol {name}", i.module));
            }
        }
    }

    fn directive(&mut self, d: &Directive, span: Span) {
        let Some(f) = self.m.function(&d.target).cloned() else {
            self.diag(span, format!("unbound symbol {}", d.target));
            return;
        };
        match d.kind {
            DirectiveKind::Verify | DirectiveKind::Instance => {
                if f.ret != Ty::Bool {
                    self.diag(span, format!("goal {} must return bool", d.target));
                    return;
                }
            }
            DirectiveKind::Decompose => {}
        }
        let mut assuming = None;
        if let Some(a) = &d.assuming {
            match self.m.function(a).cloned() {
                Some(g) => {
                    let same = g.params.len() == f.params.len()
                        && g.params.iter().zip(&f.params).all(|(x, y)| x.1 == y.1);
                    if !same || g.ret != Ty::Bool {
                        self.diag(span, format!("side condition {a} must take the parameters of {} and return bool", d.target));
                        return;
                    }
                    assuming = Some(g.qname);
                }
                None => {
                    self.diag(span, format!("unbound symbol {a}"));
                    return;
                }
            }
        }
        let mut basis = Vec::new();
        for b in &d.basis {
            match self.m.function(b) {
                Some(g) => basis.push(g.qname.clone()),
                None => {
                    self.diag(span, format!("unbound symbol {b}"));
                    return;
                }
            }
        }
        self.m.directives.push(TDirective { kind: d.kind, target: f.qname, assuming, basis });
    }

    fn unbound(&self, name: &str, span: Span) -> TErr {
        let msg = if self.declared_later.contains(name) {
            format!("symbol {name} is used before its declaration")
        } else {
            format!("unbound symbol {name}")
        };
        TErr { span, msg, needs_type: false }
    }

    fn tc(&self, e: &Expr, env: &mut Vec<(String, Ty)>, exp: Option<&Ty>) -> TResult<TExpr> {
        let t = self.tc_inner(e, env, exp)?;
        if let Some(x) = exp {
            if &t.ty != x {
                return err(e.span, format!("type mismatch: expected {x}, found {}", t.ty));
            }
        }
        Ok(t)
    }

    /// Infers the first expression, falling back to the second when the
    /// first needs a type annotation, then checks the other against it.
    fn tc_same(&self, a: &Expr, b: &Expr, env: &mut Vec<(String, Ty)>, exp: Option<&Ty>) -> TResult<(TExpr, TExpr)> {
        if exp.is_none() && is_int_literal(a) {
            let tb = self.tc(b, env, None)?;
            let ta = self.tc(a, env, Some(&tb.ty))?;
            return Ok((ta, tb));
        }
        match self.tc(a, env, exp) {
            Ok(ta) => {
                let tb = self.tc(b, env, Some(&ta.ty))?;
                Ok((ta, tb))
            }
            Err(e) if e.needs_type => {
                let tb = self.tc(b, env, exp)?;
                let ta = self.tc(a, env, Some(&tb.ty))?;
                Ok((ta, tb))
            }
            Err(e) => Err(e),
        }
    }

    fn tc_inner(&self, e: &Expr, env: &mut Vec<(String, Ty)>, exp: Option<&Ty>) -> TResult<TExpr> {
        let span = e.span;
        let mk = |kind: TKind, ty: Ty| Ok(TExpr { kind, ty, span });
        match &e.kind {
            ExprKind::Int(n) => {
                if exp == Some(&Ty::Rat) {
                    mk(TKind::Rat(num_rational::BigRational::from_integer(n.clone())), Ty::Rat)
                } else {
                    mk(TKind::Int(n.clone()), Ty::Int)
                }
            }
            ExprKind::Rat(r) => mk(TKind::Rat(r.clone()), Ty::Rat),
            ExprKind::Bool(b) => mk(TKind::Bool(*b), Ty::Bool),
            ExprKind::Var(x) => {
                if let Some((_, t)) = env.iter().rev().find(|(n, _)| n == x) {
                    return mk(TKind::Var(x.clone()), t.clone());
                }
                if let Some(f) = self.m.function(x) {
                    return err(span, format!("function {x} must be applied to {} arguments", f.params.len()));
                }
                Err(self.unbound(x, span))
            }
            ExprKind::Unary(UnOp::Neg, x) => {
                let tx = self.tc(x, env, exp.filter(|t| t.is_numeric()))?;
                if !tx.ty.is_numeric() {
                    return err(span, format!("negation expects a number, found {}", tx.ty));
                }
                let ty = tx.ty.clone();
                mk(TKind::Unary(UnOp::Neg, Box::new(tx)), ty)
            }
            ExprKind::Unary(UnOp::Not, x) => {
                let tx = self.tc(x, env, Some(&Ty::Bool))?;
                mk(TKind::Unary(UnOp::Not, Box::new(tx)), Ty::Bool)
            }
            ExprKind::Binary(op, a, b) => self.tc_binary(*op, a, b, env, exp, span),
            ExprKind::If(c, a, b) => {
                let tcnd = self.tc(c, env, Some(&Ty::Bool))?;
                let (ta, tb) = self.tc_same(a, b, env, exp)?;
                let ty = ta.ty.clone();
                mk(TKind::If(Box::new(tcnd), Box::new(ta), Box::new(tb)), ty)
            }
            ExprKind::Let(n, b, body) => {
                let tb = self.tc(b, env, None)?;
                env.push((n.clone(), tb.ty.clone()));
                let r = self.tc(body, env, exp);
                env.pop();
                let tbody = r?;
                let ty = tbody.ty.clone();
                mk(TKind::Let(n.clone(), Box::new(tb), Box::new(tbody)), ty)
            }
            ExprKind::Match(s, arms) => self.tc_match(s, arms, env, exp, span),
            ExprKind::Call(f, args) => {
                if env.iter().any(|(n, _)| n == f) {
                    return err(span, format!("{f} is not a function"));
                }
                let Some(info) = self.m.function(f) else { return Err(self.unbound(f, span)) };
                if info.params.len() != args.len() {
                    return err(
                        span,
                        format!("function {f} expects {} arguments, got {}", info.params.len(), args.len()),
                    );
                }
                let mut targs = Vec::new();
                for (a, (_, pt)) in args.iter().zip(&info.params) {
                    targs.push(self.tc(a, env, Some(pt))?);
                }
                mk(TKind::Call(info.qname.clone(), targs), info.ret.clone())
            }
            ExprKind::Record(fields) => {
                let names: BTreeSet<&str> = fields.iter().map(|(f, _)| f.as_str()).collect();
                if names.len() != fields.len() {
                    return err(span, "duplicate field in record literal");
                }
                let mut candidates: Vec<&TypeInfo> = self
                    .m
                    .scope
                    .types
                    .values()
                    .filter_map(|q| self.m.types.get(q))
                    .filter(|t| match &t.kind {
                        TypeKind::Record(fs) => {
                            fs.len() == names.len() && fs.iter().all(|(f, _)| names.contains(f.as_str()))
                        }
                        _ => false,
                    })
                    .collect();
                if let Some(Ty::Named(q)) = exp {
                    if candidates.iter().any(|t| &t.qname == q) {
                        candidates.retain(|t| &t.qname == q);
                    }
                }
                candidates.dedup_by(|a, b| a.qname == b.qname);
                let info = match candidates.as_slice() {
                    [one] => *one,
                    [] => {
                        let list: Vec<&str> = names.into_iter().collect();
                        return err(span, format!("no record type with fields {}", list.join(", ")));
                    }
                    _ => return Err(TErr { span, msg: "ambiguous record literal".into(), needs_type: true }),
                };
                let TypeKind::Record(decl) = &info.kind else { unreachable!() };
                let mut out = Vec::new();
                for (f, ft) in decl {
                    let (_, fe) = fields.iter().find(|(n, _)| n == f).unwrap();
                    out.push(self.tc(fe, env, Some(ft))?);
                }
                mk(TKind::Record(info.qname.clone(), out), Ty::Named(info.qname.clone()))
            }
            ExprKind::Field(x, f) => {
                let tx = self.tc(x, env, None)?;
                let Some(fields) = self.m.record_fields(&tx.ty) else {
                    return err(span, format!("field access .{f} on non-record type {}", tx.ty));
                };
                let Some(i) = fields.iter().position(|(n, _)| n == f) else {
                    return err(span, format!("type {} has no field {f}", tx.ty));
                };
                let ty = fields[i].1.clone();
                mk(TKind::Field(Box::new(tx), i), ty)
            }
            ExprKind::Ctor(c, args) if c == NIL => match exp {
                Some(t @ Ty::List(_)) => mk(TKind::Ctor(0, vec![]), t.clone()),
                _ => Err(TErr { span, msg: "cannot infer the element type of []".into(), needs_type: true }),
            },
            ExprKind::Ctor(c, args) if c == CONS => {
                let (h, t) = (&args[0], &args[1]);
                let (th, tt) = match exp {
                    Some(l @ Ty::List(el)) => (self.tc(h, env, Some(el))?, self.tc(t, env, Some(l))?),
                    Some(other) => return err(span, format!("type mismatch: expected {other}, found a list")),
                    None => match self.tc(h, env, None) {
                        Ok(th) => {
                            let lt = Ty::list(th.ty.clone());
                            let tt = self.tc(t, env, Some(&lt))?;
                            (th, tt)
                        }
                        Err(e) if e.needs_type => {
                            let tt = self.tc(t, env, None)?;
                            let Ty::List(el) = &tt.ty else {
                                return err(span, format!("right operand of :: must be a list, found {}", tt.ty));
                            };
                            let el = (**el).clone();
                            (self.tc(h, env, Some(&el))?, tt)
                        }
                        Err(e) => return Err(e),
                    },
                };
                let ty = tt.ty.clone();
                mk(TKind::Ctor(1, vec![th, tt]), ty)
            }
            ExprKind::Ctor(c, args) => {
                let Some((tq, idx)) = self.m.scope.ctors.get(c).cloned() else {
                    return err(span, format!("unbound constructor {c}"));
                };
                let ctor = match &self.m.types[&tq].kind {
                    TypeKind::Variant(cs) => cs[idx].clone(),
                    TypeKind::Record(_) => unreachable!(),
                };
                let mut targs = Vec::new();
                if ctor.fields.len() == 1 && args.len() > 1 {
                    if let Ty::Tuple(ts) = &ctor.fields[0] {
                        if ts.len() == args.len() {
                            let mut items = Vec::new();
                            for (a, t) in args.iter().zip(ts) {
                                items.push(self.tc(a, env, Some(t))?);
                            }
                            targs.push(TExpr { kind: TKind::Tuple(items), ty: ctor.fields[0].clone(), span });
                        }
                    }
                }
                if targs.is_empty() {
                    if ctor.fields.len() != args.len() {
                        return err(
                            span,
                            format!("constructor {c} expects {} arguments, got {}", ctor.fields.len(), args.len()),
                        );
                    }
                    for (a, t) in args.iter().zip(&ctor.fields) {
                        targs.push(self.tc(a, env, Some(t))?);
                    }
                }
                mk(TKind::Ctor(idx, targs), Ty::Named(tq))
            }
            ExprKind::Tuple(items) => {
                let mut out = Vec::new();
                match exp {
                    Some(Ty::Tuple(ts)) if ts.len() == items.len() => {
                        for (x, t) in items.iter().zip(ts) {
                            out.push(self.tc(x, env, Some(t))?);
                        }
                    }
                    _ => {
                        for x in items {
                            out.push(self.tc(x, env, None)?);
                        }
                    }
                }
                let ty = Ty::Tuple(out.iter().map(|t| t.ty.clone()).collect());
                mk(TKind::Tuple(out), ty)
            }
            ExprKind::List(items) => {
                let el = match exp {
                    Some(Ty::List(el)) => (**el).clone(),
                    Some(other) => return err(span, format!("type mismatch: expected {other}, found a list")),
                    None => {
                        let mut found = None;
                        for x in items {
                            match self.tc(x, env, None) {
                                Ok(t) => {
                                    found = Some(t.ty);
                                    break;
                                }
                                Err(e) if e.needs_type => continue,
                                Err(e) => return Err(e),
                            }
                        }
                        match found {
                            Some(t) => t,
                            None => {
                                return Err(TErr {
                                    span,
                                    msg: "cannot infer the element type of list literal".into(),
                                    needs_type: true,
                                })
                            }
                        }
                    }
                };
                let lt = Ty::list(el.clone());
                let mut acc = TExpr { kind: TKind::Ctor(0, vec![]), ty: lt.clone(), span };
                let mut typed = Vec::new();
                for x in items {
                    typed.push(self.tc(x, env, Some(&el))?);
                }
                for t in typed.into_iter().rev() {
                    let s = t.span;
                    acc = TExpr { kind: TKind::Ctor(1, vec![t, acc]), ty: lt.clone(), span: s };
                }
                acc.span = span;
                Ok(acc)
            }
        }
    }

    fn tc_binary(&self, op: BinOp, a: &Expr, b: &Expr, env: &mut Vec<(String, Ty)>, exp: Option<&Ty>, span: Span) -> TResult<TExpr> {
        let mk = |ta: TExpr, tb: TExpr, ty: Ty| {
            Ok(TExpr { kind: TKind::Binary(op, Box::new(ta), Box::new(tb)), ty, span })
        };
        match op {
            BinOp::Add | BinOp::Sub | BinOp::Mul => {
                let (ta, tb) = self.tc_same(a, b, env, exp.filter(|t| t.is_numeric()))?;
                if !ta.ty.is_numeric() {
                    return err(span, format!("operator {} expects numbers, found {}", op.symbol(), ta.ty));
                }
                let ty = ta.ty.clone();
                mk(ta, tb, ty)
            }
            BinOp::Div => {
                let ta = self.tc(a, env, Some(&Ty::Rat))?;
                let tb = self.tc(b, env, Some(&Ty::Rat))?;
                mk(ta, tb, Ty::Rat)
            }
            BinOp::IntDiv | BinOp::Mod => {
                let ta = self.tc(a, env, Some(&Ty::Int))?;
                let tb = self.tc(b, env, Some(&Ty::Int))?;
                mk(ta, tb, Ty::Int)
            }
            BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge => {
                let (ta, tb) = self.tc_same(a, b, env, None)?;
                if !ta.ty.is_numeric() {
                    return err(span, format!("operator {} expects numbers, found {}", op.symbol(), ta.ty));
                }
                mk(ta, tb, Ty::Bool)
            }
            BinOp::Eq | BinOp::Neq => {
                let (ta, tb) = self.tc_same(a, b, env, None)?;
                mk(ta, tb, Ty::Bool)
            }
            BinOp::And | BinOp::Or | BinOp::Implies => {
                let ta = self.tc(a, env, Some(&Ty::Bool))?;
                let tb = self.tc(b, env, Some(&Ty::Bool))?;
                mk(ta, tb, Ty::Bool)
            }
        }
    }

    fn tc_match(&self, s: &Expr, arms: &[Arm], env: &mut Vec<(String, Ty)>, exp: Option<&Ty>, span: Span) -> TResult<TExpr> {
        let ts = self.tc(s, env, None)?;
        let mut tarms: Vec<TypedArm> = Vec::new();
        match &ts.ty {
            Ty::Tuple(items) => {
                for arm in arms {
                    let (pat, binds) = match &arm.pattern {
                        Pattern::Wildcard => (TPattern::Wildcard, vec![]),
                        Pattern::Tuple(bs) if bs.len() == items.len() => {
                            let binds = bs
                                .iter()
                                .zip(items)
                                .filter_map(|(b, t)| b.name().map(|n| (n.to_string(), t.clone())))
                                .collect();
                            (TPattern::Tuple(bs.iter().map(|b| b.name().map(String::from)).collect()), binds)
                        }
                        _ => return err(arm.span, format!("pattern does not match type {}", ts.ty)),
                    };
                    if !tarms.is_empty() {
                        return err(arm.span, "unused match arm");
                    }
                    tarms.push((pat, binds, arm));
                }
            }
            ty => {
                let Some(ctors) = self.m.ctors_of(ty) else {
                    return err(s.span, format!("cannot match on a value of type {ty}"));
                };
                let mut covered = vec![false; ctors.len()];
                let mut all = false;
                for arm in arms {
                    if all {
                        return err(arm.span, "unused match arm");
                    }
                    match &arm.pattern {
                        Pattern::Wildcard => {
                            if covered.iter().all(|c| *c) {
                                return err(arm.span, "unused match arm");
                            }
                            all = true;
                            tarms.push((TPattern::Wildcard, vec![], arm));
                        }
                        Pattern::Ctor(c, bs) => {
                            let Some(i) = ctors.iter().position(|k| &k.name == c) else {
                                return err(arm.span, format!("constructor {c} does not belong to type {ty}"));
                            };
                            if covered[i] {
                                return err(arm.span, "unused match arm");
                            }
                            covered[i] = true;
                            let fields = &ctors[i].fields;
                            if bs.len() != fields.len() {
                                return err(
                                    arm.span,
                                    format!("constructor {c} has {} fields, pattern binds {}", fields.len(), bs.len()),
                                );
                            }
                            let binds = bs
                                .iter()
                                .zip(fields)
                                .filter_map(|(b, t)| b.name().map(|n| (n.to_string(), t.clone())))
                                .collect();
                            tarms.push((TPattern::Ctor(i, bs.iter().map(|b| b.name().map(String::from)).collect()), binds, arm));
                        }
                        Pattern::Tuple(_) => return err(arm.span, format!("pattern does not match type {ty}")),
                    }
                }
                if !all {
                    if let Some(i) = covered.iter().position(|c| !*c) {
                        return err(span, format!("non-exhaustive match: constructor {} is not covered", ctors[i].name));
                    }
                }
            }
        }
        if tarms.is_empty() {
            return err(span, "match with no arms");
        }
        let mut result_ty = exp.cloned();
        if result_ty.is_none() {
            for (_, binds, arm) in &tarms {
                let n = env.len();
                env.extend(binds.iter().cloned());
                let r = self.tc(&arm.body, env, None);
                env.truncate(n);
                match r {
                    Ok(t) => {
                        result_ty = Some(t.ty);
                        break;
                    }
                    Err(e) if e.needs_type => continue,
                    Err(e) => return Err(e),
                }
            }
        }
        let Some(rt) = result_ty else {
            return Err(TErr { span, msg: "cannot infer the type of match".into(), needs_type: true });
        };
        let mut out = Vec::new();
        for (pat, binds, arm) in tarms {
            let n = env.len();
            env.extend(binds);
            let r = self.tc(&arm.body, env, Some(&rt));
            env.truncate(n);
            out.push(TArm { pattern: pat, body: r? });
        }
        Ok(TExpr { kind: TKind::Match(Box::new(ts), out), ty: rt, span })
    }
}

fn mentions(ty: &Ty, q: &str) -> bool {
    match ty {
        Ty::Named(n) => n == q,
        Ty::Tuple(ts) => ts.iter().any(|t| mentions(t, q)),
        // Lists always have the empty value.
        Ty::List(_) => false,
        _ => false,
    }
}

fn is_int_literal(e: &Expr) -> bool {
    match &e.kind {
        ExprKind::Int(_) => true,
        ExprKind::Unary(UnOp::Neg, x) => is_int_literal(x),
        _ => false,
    }
}
