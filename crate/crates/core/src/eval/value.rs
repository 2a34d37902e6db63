use crate::lang::ast::{bare, Ty};
use crate::lang::module::{Module, TypeKind};
use crate::lang::pretty::rat_literal;
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, Zero};
use serde_json::{json, Map, Value as Json};
use std::fmt;

/// A concrete MML value. Rationals are always in lowest terms.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Value {
    Int(BigInt),
    Rat(BigRational),
    Bool(bool),
    Tuple(Vec<Value>),
    List(Vec<Value>),
    /// Record with its (unqualified) type name and fields in declaration order.
    Record(String, Vec<(String, Value)>),
    Variant(String, Vec<Value>),
}

impl Value {
    pub fn int(n: i64) -> Value {
        Value::Int(BigInt::from(n))
    }

    pub fn as_bool(&self) -> Option<bool> {
        match self {
            Value::Bool(b) => Some(*b),
            _ => None,
        }
    }

    pub fn as_int(&self) -> Option<&BigInt> {
        match self {
            Value::Int(n) => Some(n),
            _ => None,
        }
    }

    pub fn field(&self, name: &str) -> Option<&Value> {
        match self {
            Value::Record(_, fs) => fs.iter().find(|(f, _)| f == name).map(|(_, v)| v),
            _ => None,
        }
    }

    /// Whether the value inhabits `ty` in module `m`.
    pub fn has_type(&self, m: &Module, ty: &Ty) -> bool {
        match (self, ty) {
            (Value::Int(_), Ty::Int) | (Value::Rat(_), Ty::Rat) | (Value::Bool(_), Ty::Bool) => true,
            (Value::Tuple(vs), Ty::Tuple(ts)) => {
                vs.len() == ts.len() && vs.iter().zip(ts).all(|(v, t)| v.has_type(m, t))
            }
            (Value::List(vs), Ty::List(t)) => vs.iter().all(|v| v.has_type(m, t)),
            (Value::Record(n, fs), Ty::Named(q)) => match m.types.get(q) {
                Some(info) => match &info.kind {
                    TypeKind::Record(decl) => {
                        *n == info.name
                            && fs.len() == decl.len()
                            && fs.iter().zip(decl).all(|((f, v), (g, t))| f == g && v.has_type(m, t))
                    }
                    TypeKind::Variant(_) => false,
                },
                None => false,
            },
            (Value::Variant(c, args), Ty::Named(q)) => match m.types.get(q).map(|t| &t.kind) {
                Some(TypeKind::Variant(cs)) => cs.iter().any(|k| {
                    &k.name == c
                        && k.fields.len() == args.len()
                        && args.iter().zip(&k.fields).all(|(v, t)| v.has_type(m, t))
                }),
                _ => false,
            },
            _ => false,
        }
    }

    /// Canonical JSON encoding.
    pub fn to_json(&self) -> Json {
        match self {
            Value::Int(n) => json!({"k": "Int", "v": n.to_string()}),
            Value::Rat(r) => json!({"k": "Rat", "num": r.numer().to_string(), "den": r.denom().to_string()}),
            Value::Bool(b) => json!({"k": "Bool", "v": b}),
            Value::Tuple(vs) => json!({"k": "Tuple", "v": vs.iter().map(Value::to_json).collect::<Vec<_>>()}),
            Value::List(vs) => json!({"k": "List", "v": vs.iter().map(Value::to_json).collect::<Vec<_>>()}),
            Value::Record(t, fs) => {
                let mut obj = Map::new();
                for (f, v) in fs {
                    obj.insert(f.clone(), v.to_json());
                }
                json!({"k": "Record", "type": t, "fields": Json::Object(obj)})
            }
            Value::Variant(c, args) => {
                json!({"k": "Variant", "ctor": c, "v": args.iter().map(Value::to_json).collect::<Vec<_>>()})
            }
        }
    }

    /// Type-directed decoding of the canonical JSON encoding.
    pub fn from_json(m: &Module, ty: &Ty, j: &Json) -> Result<Value, String> {
        let kind = j.get("k").and_then(Json::as_str).ok_or("missing value tag `k`")?;
        let items = |j: &Json| -> Result<Vec<Json>, String> {
            j.get("v").and_then(Json::as_array).cloned().ok_or_else(|| "missing array `v`".to_string())
        };
        let big = |j: Option<&Json>, what: &str| -> Result<BigInt, String> {
            j.and_then(Json::as_str)
                .ok_or_else(|| format!("missing string `{what}`"))?
                .parse::<BigInt>()
                .map_err(|e| format!("bad integer in `{what}`: {e}"))
        };
        match (kind, ty) {
            ("Int", Ty::Int) => Ok(Value::Int(big(j.get("v"), "v")?)),
            ("Rat", Ty::Rat) => {
                let den = big(j.get("den"), "den")?;
                if den.is_zero() {
                    return Err("zero denominator".into());
                }
                Ok(Value::Rat(BigRational::new(big(j.get("num"), "num")?, den)))
            }
            ("Bool", Ty::Bool) => Ok(Value::Bool(j.get("v").and_then(Json::as_bool).ok_or("missing bool `v`")?)),
            ("Tuple", Ty::Tuple(ts)) => {
                let xs = items(j)?;
                if xs.len() != ts.len() {
                    return Err(format!("tuple of {} elements expected", ts.len()));
                }
                Ok(Value::Tuple(xs.iter().zip(ts).map(|(x, t)| Value::from_json(m, t, x)).collect::<Result<_, _>>()?))
            }
            ("List", Ty::List(t)) => {
                Ok(Value::List(items(j)?.iter().map(|x| Value::from_json(m, t, x)).collect::<Result<_, _>>()?))
            }
            ("Record", Ty::Named(q)) => {
                let info = m.types.get(q).ok_or_else(|| format!("unknown type {q}"))?;
                let TypeKind::Record(decl) = &info.kind else { return Err(format!("{} is not a record type", info.name)) };
                let fields = j.get("fields").and_then(Json::as_object).ok_or("missing object `fields`")?;
                if fields.len() != decl.len() {
                    return Err(format!("record {} expects {} fields", info.name, decl.len()));
                }
                let mut out = Vec::new();
                for (f, t) in decl {
                    let fj = fields.get(f).ok_or_else(|| format!("missing field `{f}`"))?;
                    out.push((f.clone(), Value::from_json(m, t, fj)?));
                }
                Ok(Value::Record(info.name.clone(), out))
            }
            ("Variant", Ty::Named(q)) => {
                let info = m.types.get(q).ok_or_else(|| format!("unknown type {q}"))?;
                let TypeKind::Variant(cs) = &info.kind else { return Err(format!("{} is not a variant type", info.name)) };
                let c = j.get("ctor").and_then(Json::as_str).ok_or("missing string `ctor`")?;
                let ctor = cs.iter().find(|k| k.name == c).ok_or_else(|| format!("unknown constructor {c}"))?;
                let xs = items(j)?;
                if xs.len() != ctor.fields.len() {
                    return Err(format!("constructor {c} expects {} arguments", ctor.fields.len()));
                }
                let args = xs.iter().zip(&ctor.fields).map(|(x, t)| Value::from_json(m, t, x)).collect::<Result<_, _>>()?;
                Ok(Value::Variant(c.to_string(), args))
            }
            (k, t) => Err(format!("value tagged {k} does not have type {t}")),
        }
    }

    fn is_simple(&self) -> bool {
        match self {
            Value::Int(n) => !n.is_negative(),
            Value::Rat(r) => !r.is_negative() && rat_literal(r).chars().all(|c| c.is_ascii_digit() || c == '.'),
            Value::Variant(_, args) => args.is_empty(),
            _ => true,
        }
    }
}

/// MML literal syntax.
impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Int(n) => write!(f, "{n}"),
            Value::Rat(r) => write!(f, "{}", rat_literal(r)),
            Value::Bool(b) => write!(f, "{b}"),
            Value::Tuple(vs) => {
                write!(f, "(")?;
                for (i, v) in vs.iter().enumerate() {
                    if i > 0 {
                        write!(f, ", ")?;
                    }
                    write!(f, "{v}")?;
                }
                write!(f, ")")
            }
            Value::List(vs) => {
                write!(f, "[")?;
                for (i, v) in vs.iter().enumerate() {
                    if i > 0 {
                        write!(f, "; ")?;
                    }
                    write!(f, "{v}")?;
                }
                write!(f, "]")
            }
            Value::Record(_, fs) => {
                write!(f, "{{")?;
                for (i, (n, v)) in fs.iter().enumerate() {
                    if i > 0 {
                        write!(f, ";")?;
                    }
                    write!(f, " {n} = {v}")?;
                }
                write!(f, " }}")
            }
            Value::Variant(c, args) => match args.as_slice() {
                [] => write!(f, "{}", bare(c)),
                [one] if one.is_simple() => write!(f, "{c} {one}"),
                [one] => write!(f, "{c} ({one})"),
                many => {
                    write!(f, "{c} (")?;
                    for (i, v) in many.iter().enumerate() {
                        if i > 0 {
                            write!(f, ", ")?;
                        }
                        write!(f, "{v}")?;
                    }
                    write!(f, ")")
                }
            },
        }
    }
}
