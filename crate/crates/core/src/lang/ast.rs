//! Surface syntax tree produced by the parser.

use num_bigint::BigInt;
use num_rational::BigRational;
use serde::Serialize;
use std::fmt;

/// Source location of a node. Spans never take part in tree equality, so a
/// reparsed pretty-printed program compares equal to the original.
#[derive(Debug, Clone, Copy, Default, Serialize)]
pub struct Span {
    pub start: usize,
    pub end: usize,
    pub line: u32,
    pub col: u32,
}

impl PartialEq for Span {
    fn eq(&self, _other: &Span) -> bool {
        true
    }
}

impl Eq for Span {}

impl Span {
    pub fn join(self, other: Span) -> Span {
        Span {
            start: self.start,
            end: other.end.max(self.end),
            line: self.line,
            col: self.col,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum Ty {
    Int,
    Rat,
    Bool,
    Named(String),
    Tuple(Vec<Ty>),
    List(Box<Ty>),
}

impl Ty {
    pub fn list(elem: Ty) -> Ty {
        Ty::List(Box::new(elem))
    }

    pub fn is_numeric(&self) -> bool {
        matches!(self, Ty::Int | Ty::Rat)
    }
}

/// Strips a `module::` qualifier for display.
pub fn bare(name: &str) -> &str {
    match name.rfind("::") {
        Some(i) => &name[i + 2..],
        None => name,
    }
}

impl fmt::Display for Ty {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Ty::Int => write!(f, "int"),
            Ty::Rat => write!(f, "rat"),
            Ty::Bool => write!(f, "bool"),
            Ty::Named(n) => write!(f, "{}", bare(n)),
            Ty::Tuple(ts) => {
                write!(f, "(")?;
                for (i, t) in ts.iter().enumerate() {
                    if i > 0 {
                        write!(f, " * ")?;
                    }
                    write!(f, "{t}")?;
                }
                write!(f, ")")
            }
            Ty::List(t) => write!(f, "{t} list"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum UnOp {
    Neg,
    Not,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    /// Exact rational division `/`.
    Div,
    /// Integer division `div`, truncating toward zero.
    IntDiv,
    Mod,
    Eq,
    Neq,
    Lt,
    Le,
    Gt,
    Ge,
    And,
    Or,
    Implies,
}

impl BinOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
            BinOp::IntDiv => "div",
            BinOp::Mod => "mod",
            BinOp::Eq => "=",
            BinOp::Neq => "<>",
            BinOp::Lt => "<",
            BinOp::Le => "<=",
            BinOp::Gt => ">",
            BinOp::Ge => ">=",
            BinOp::And => "&&",
            BinOp::Or => "||",
            BinOp::Implies => "==>",
        }
    }

    /// Binding strength; higher binds tighter.
    pub fn precedence(self) -> u8 {
        match self {
            BinOp::Implies => 1,
            BinOp::Or => 2,
            BinOp::And => 3,
            BinOp::Eq | BinOp::Neq | BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge => 4,
            BinOp::Add | BinOp::Sub => 6,
            BinOp::Mul | BinOp::Div | BinOp::IntDiv | BinOp::Mod => 7,
        }
    }
}

/// Names of the built-in list constructors.
pub const NIL: &str = "[]";
pub const CONS: &str = "::";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Expr {
    pub kind: ExprKind,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ExprKind {
    Int(BigInt),
    Rat(BigRational),
    Bool(bool),
    Var(String),
    Unary(UnOp, Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
    If(Box<Expr>, Box<Expr>, Box<Expr>),
    Match(Box<Expr>, Vec<Arm>),
    Let(String, Box<Expr>, Box<Expr>),
    Call(String, Vec<Expr>),
    /// Record literal; the type is resolved from the field set at admission.
    Record(Vec<(String, Expr)>),
    Field(Box<Expr>, String),
    /// Variant constructor application, including `[]` and `::`.
    Ctor(String, Vec<Expr>),
    Tuple(Vec<Expr>),
    /// `[a; b; c]` list literal.
    List(Vec<Expr>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Arm {
    pub pattern: Pattern,
    pub body: Expr,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Pattern {
    Wildcard,
    Ctor(String, Vec<Binder>),
    Tuple(Vec<Binder>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Binder {
    Name(String),
    Wild,
}

impl Binder {
    pub fn name(&self) -> Option<&str> {
        match self {
            Binder::Name(n) => Some(n),
            Binder::Wild => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CtorDef {
    pub name: String,
    pub fields: Vec<Ty>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TypeBody {
    Variant(Vec<CtorDef>),
    Record(Vec<(String, Ty)>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TypeDef {
    pub name: String,
    pub body: TypeBody,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FunDef {
    pub name: String,
    pub recursive: bool,
    pub params: Vec<(String, Ty)>,
    pub ret: Option<Ty>,
    pub body: Expr,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OpaqueDecl {
    pub name: String,
    pub params: Vec<Ty>,
    pub ret: Ty,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AxiomDecl {
    pub name: String,
    pub params: Vec<(String, Ty)>,
    pub body: Expr,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ImportDecl {
    pub module: String,
    pub names: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum DirectiveKind {
    Verify,
    Instance,
    Decompose,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Directive {
    pub kind: DirectiveKind,
    pub target: String,
    pub assuming: Option<String>,
    pub basis: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DeclKind {
    Type(TypeDef),
    Fun(FunDef),
    Opaque(OpaqueDecl),
    Axiom(AxiomDecl),
    Import(ImportDecl),
    Directive(Directive),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Decl {
    pub kind: DeclKind,
    pub span: Span,
}

impl Decl {
    /// Declared name, if the declaration introduces one.
    pub fn name(&self) -> Option<&str> {
        match &self.kind {
            DeclKind::Type(t) => Some(&t.name),
            DeclKind::Fun(f) => Some(&f.name),
            DeclKind::Opaque(o) => Some(&o.name),
            DeclKind::Axiom(a) => Some(&a.name),
            DeclKind::Import(_) | DeclKind::Directive(_) => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Program {
    pub file: String,
    pub decls: Vec<Decl>,
}

impl Program {
    pub fn imports(&self) -> impl Iterator<Item = &ImportDecl> {
        self.decls.iter().filter_map(|d| match &d.kind {
            DeclKind::Import(i) => Some(i),
            _ => None,
        })
    }
}
