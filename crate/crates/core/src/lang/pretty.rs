//! Pretty-printer for the surface syntax. Output reparses to an equal tree.

use super::ast::*;
use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use std::fmt::Write;

pub fn print_program(p: &Program) -> String {
    let mut out = String::new();
    for (i, d) in p.decls.iter().enumerate() {
        if i > 0 {
            out.push('\n');
        }
        out.push_str(&print_decl(d));
        out.push('\n');
    }
    out
}

pub fn print_decl(d: &Decl) -> String {
    let mut s = String::new();
    match &d.kind {
        DeclKind::Type(t) => {
            write!(s, "type {} = ", t.name).unwrap();
            match &t.body {
                TypeBody::Variant(ctors) => {
                    let parts: Vec<String> = ctors
                        .iter()
                        .map(|c| {
                            if c.fields.is_empty() {
                                c.name.clone()
                            } else {
                                let fs: Vec<String> = c.fields.iter().map(|t| t.to_string()).collect();
                                format!("{} of {}", c.name, fs.join(" * "))
                            }
                        })
                        .collect();
                    s.push_str(&parts.join(" | "));
                }
                TypeBody::Record(fields) => {
                    let parts: Vec<String> = fields.iter().map(|(f, t)| format!("{f} : {t}")).collect();
                    write!(s, "{{ {} }}", parts.join("; ")).unwrap();
                }
            }
        }
        DeclKind::Fun(f) => {
            write!(s, "let {}{}", if f.recursive { "rec " } else { "" }, f.name).unwrap();
            for (n, t) in &f.params {
                write!(s, " ({n} : {t})").unwrap();
            }
            if let Some(r) = &f.ret {
                write!(s, " : {r}").unwrap();
            }
            s.push_str(" =\n  ");
            s.push_str(&print_expr_at(&f.body, 0, 1));
        }
        DeclKind::Opaque(o) => {
            let mut tys: Vec<String> = o.params.iter().map(|t| t.to_string()).collect();
            tys.push(o.ret.to_string());
            write!(s, "opaque {} : {}", o.name, tys.join(" -> ")).unwrap();
        }
        DeclKind::Axiom(a) => {
            write!(s, "axiom {}", a.name).unwrap();
            for (n, t) in &a.params {
                write!(s, " ({n} : {t})").unwrap();
            }
            s.push_str(" =\n  ");
            s.push_str(&print_expr_at(&a.body, 0, 1));
        }
        DeclKind::Import(i) => {
            write!(s, "import {} ({})", i.module, i.names.join(", ")).unwrap();
        }
        DeclKind::Directive(dir) => {
            let kw = match dir.kind {
                DirectiveKind::Verify => "verify",
                DirectiveKind::Instance => "instance",
                DirectiveKind::Decompose => "decompose",
            };
            write!(s, "{kw} {}", dir.target).unwrap();
            if let Some(a) = &dir.assuming {
                write!(s, " assuming {a}").unwrap();
            }
            if !dir.basis.is_empty() {
                write!(s, " basis {}", dir.basis.join(", ")).unwrap();
            }
        }
    }
    s
}

pub fn print_expr(e: &Expr) -> String {
    print_expr_at(e, 0, 0)
}

/// Renders a rational in decimal notation when it terminates, otherwise as a quotient.
pub fn rat_literal(r: &BigRational) -> String {
    let mut den = r.denom().clone();
    let mut k = 0usize;
    let two = BigInt::from(2);
    let five = BigInt::from(5);
    let (mut twos, mut fives) = (0usize, 0usize);
    while den.is_even() {
        den /= &two;
        twos += 1;
    }
    while (&den % &five).is_zero() {
        den /= &five;
        fives += 1;
    }
    if !den.is_one() {
        return format!("({} / {})", r.numer(), r.denom());
    }
    k = k.max(twos).max(fives).max(1);
    let scaled = r * BigRational::from_integer(num_traits::pow(BigInt::from(10), k));
    let n = scaled.to_integer();
    let digits = n.abs().to_string();
    let digits = format!("{digits:0>width$}", width = k + 1);
    let (ip, fp) = digits.split_at(digits.len() - k);
    format!("{}{ip}.{fp}", if n.is_negative() { "-" } else { "" })
}

fn prec_of(e: &Expr) -> u8 {
    match &e.kind {
        ExprKind::Let(..) | ExprKind::If(..) | ExprKind::Match(..) => 0,
        ExprKind::Binary(op, ..) => op.precedence(),
        ExprKind::Ctor(c, args) if c == CONS && args.len() == 2 => 5,
        ExprKind::Unary(..) => 8,
        ExprKind::Rat(r) if r.is_negative() => 8,
        ExprKind::Call(..) => 9,
        ExprKind::Ctor(_, args) if !args.is_empty() => 9,
        _ => 10,
    }
}

fn pad(indent: usize) -> String {
    "  ".repeat(indent)
}

fn print_expr_at(e: &Expr, ctx: u8, indent: usize) -> String {
    let body = print_inner(e, indent);
    if prec_of(e) < ctx || (ctx > 0 && prec_of(e) == 0) {
        format!("({body})")
    } else {
        body
    }
}

fn print_inner(e: &Expr, indent: usize) -> String {
    match &e.kind {
        ExprKind::Int(n) => n.to_string(),
        ExprKind::Rat(r) => rat_literal(r),
        ExprKind::Bool(b) => b.to_string(),
        ExprKind::Var(v) => v.clone(),
        ExprKind::Unary(UnOp::Neg, x) => format!("-{}", print_expr_at(x, 8, indent)),
        ExprKind::Unary(UnOp::Not, x) => format!("not {}", print_expr_at(x, 9, indent)),
        ExprKind::Binary(op, l, r) => {
            let p = op.precedence();
            let (lc, rc) = match op {
                BinOp::Implies => (p + 1, p),
                _ if p == 4 => (p + 1, p + 1),
                _ => (p, p + 1),
            };
            format!(
                "{} {} {}",
                print_expr_at(l, lc, indent),
                op.symbol(),
                print_expr_at(r, rc, indent)
            )
        }
        ExprKind::If(c, t, f) => format!(
            "if {} then {}\n{}else {}",
            print_expr_at(c, 0, indent + 1),
            print_expr_at(t, 1, indent + 1),
            pad(indent),
            print_expr_at(f, 0, indent)
        ),
        ExprKind::Match(s, arms) => {
            let mut out = format!("match {} with", print_expr_at(s, 0, indent + 1));
            for (i, arm) in arms.iter().enumerate() {
                let ctx = if i + 1 == arms.len() { 0 } else { 1 };
                write!(
                    out,
                    "\n{}| {} -> {}",
                    pad(indent),
                    print_pattern(&arm.pattern),
                    print_expr_at(&arm.body, ctx, indent + 1)
                )
                .unwrap();
            }
            out
        }
        ExprKind::Let(n, b, body) => format!(
            "let {n} = {} in\n{}{}",
            print_expr_at(b, 0, indent + 1),
            pad(indent),
            print_expr_at(body, 0, indent)
        ),
        ExprKind::Call(f, args) => {
            let mut out = f.clone();
            for a in args {
                out.push(' ');
                out.push_str(&print_expr_at(a, 10, indent));
            }
            out
        }
        ExprKind::Record(fields) => {
            let parts: Vec<String> =
                fields.iter().map(|(f, v)| format!("{f} = {}", print_expr_at(v, 1, indent))).collect();
            format!("{{ {} }}", parts.join("; "))
        }
        ExprKind::Field(x, f) => format!("{}.{f}", print_expr_at(x, 10, indent)),
        ExprKind::Ctor(c, args) if c == NIL && args.is_empty() => "[]".into(),
        ExprKind::Ctor(c, args) if c == CONS && args.len() == 2 => format!(
            "{} :: {}",
            print_expr_at(&args[0], 6, indent),
            print_expr_at(&args[1], 5, indent)
        ),
        ExprKind::Ctor(c, args) => match args.len() {
            0 => c.clone(),
            1 if !matches!(args[0].kind, ExprKind::Tuple(_)) => {
                format!("{c} {}", print_expr_at(&args[0], 10, indent))
            }
            _ => {
                let parts: Vec<String> = args.iter().map(|a| print_expr_at(a, 1, indent)).collect();
                format!("{c} ({})", parts.join(", "))
            }
        },
        ExprKind::Tuple(items) => {
            let parts: Vec<String> = items.iter().map(|a| print_expr_at(a, 1, indent)).collect();
            format!("({})", parts.join(", "))
        }
        ExprKind::List(items) => {
            let parts: Vec<String> = items.iter().map(|a| print_expr_at(a, 1, indent)).collect();
            format!("[{}]", parts.join("; "))
        }
    }
}

fn print_binder(b: &Binder) -> String {
    match b {
        Binder::Name(n) => n.clone(),
        Binder::Wild => "_".into(),
    }
}

pub fn print_pattern(p: &Pattern) -> String {
    match p {
        Pattern::Wildcard => "_".into(),
        Pattern::Tuple(bs) => {
            let parts: Vec<String> = bs.iter().map(print_binder).collect();
            format!("({})", parts.join(", "))
        }
        Pattern::Ctor(c, bs) if c == NIL && bs.is_empty() => "[]".into(),
        Pattern::Ctor(c, bs) if c == CONS && bs.len() == 2 => {
            format!("{} :: {}", print_binder(&bs[0]), print_binder(&bs[1]))
        }
        Pattern::Ctor(c, bs) => match bs.len() {
            0 => c.clone(),
            1 => format!("{c} {}", print_binder(&bs[0])),
            _ => {
                let parts: Vec<String> = bs.iter().map(print_binder).collect();
                format!("{c} ({})", parts.join(", "))
            }
        },
    }
}
