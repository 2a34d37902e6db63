//! Exhaustive enumeration and random generation of MML values.

use num_bigint::BigInt;
use num_rational::BigRational;
use rand::Rng;
use regionforge_core::eval::Value;
use regionforge_core::lang::module::TypeKind;
use regionforge_core::lang::{Module, Ty};

/// A small finite domain.
#[derive(Debug, Clone)]
pub struct Domain {
    pub int_lo: i64,
    pub int_hi: i64,
    pub max_list: usize,
    /// Nesting limit for recursive variant types.
    pub max_depth: usize,
}

impl Domain {
    pub fn small() -> Domain {
        Domain { int_lo: -8, int_hi: 8, max_list: 2, max_depth: 2 }
    }
}

fn rats(d: &Domain) -> Vec<Value> {
    let mut out = vec![];
    for den in [1i64, 2, 3] {
        for num in d.int_lo..=d.int_hi {
            let r = BigRational::new(BigInt::from(num), BigInt::from(den));
            let v = Value::Rat(r);
            if !out.contains(&v) {
                out.push(v);
            }
        }
    }
    out
}

fn product(choices: &[Vec<Value>], limit: usize) -> Vec<Vec<Value>> {
    let mut out: Vec<Vec<Value>> = vec![vec![]];
    for c in choices {
        let mut next = Vec::new();
        for prefix in &out {
            for v in c {
                if next.len() >= limit {
                    break;
                }
                let mut p = prefix.clone();
                p.push(v.clone());
                next.push(p);
            }
        }
        out = next;
    }
    out
}

/// Every value of `ty` in the domain, up to `limit` values.
pub fn enumerate(m: &Module, ty: &Ty, d: &Domain, limit: usize) -> Vec<Value> {
    enum_depth(m, ty, d, limit, d.max_depth)
}

fn enum_depth(m: &Module, ty: &Ty, d: &Domain, limit: usize, depth: usize) -> Vec<Value> {
    match ty {
        Ty::Int => (d.int_lo..=d.int_hi).map(Value::int).collect(),
        Ty::Rat => rats(d),
        Ty::Bool => vec![Value::Bool(false), Value::Bool(true)],
        Ty::Tuple(ts) => {
            let cs: Vec<Vec<Value>> = ts.iter().map(|t| enum_depth(m, t, d, limit, depth)).collect();
            product(&cs, limit).into_iter().map(Value::Tuple).collect()
        }
        Ty::List(e) => {
            let elems = enum_depth(m, e, d, limit, depth);
            let mut out = vec![Value::List(vec![])];
            for n in 1..=d.max_list {
                let cs = vec![elems.clone(); n];
                for xs in product(&cs, limit) {
                    if out.len() >= limit {
                        return out;
                    }
                    out.push(Value::List(xs));
                }
            }
            out
        }
        Ty::Named(q) => {
            let info = m.types.get(q).unwrap_or_else(|| panic!("unknown type {q}"));
            match &info.kind {
                TypeKind::Record(fs) => {
                    let cs: Vec<Vec<Value>> = fs.iter().map(|(_, t)| enum_depth(m, t, d, limit, depth)).collect();
                    product(&cs, limit)
                        .into_iter()
                        .map(|vs| Value::Record(info.name.clone(), fs.iter().map(|(f, _)| f.clone()).zip(vs).collect()))
                        .collect()
                }
                TypeKind::Variant(cs) => {
                    let mut out = vec![];
                    for c in cs {
                        let recursive = c.fields.iter().any(|t| mentions(m, t, q));
                        if recursive && depth == 0 {
                            continue;
                        }
                        let next = if recursive { depth - 1 } else { depth };
                        let args: Vec<Vec<Value>> = c.fields.iter().map(|t| enum_depth(m, t, d, limit, next)).collect();
                        for a in product(&args, limit) {
                            if out.len() >= limit {
                                return out;
                            }
                            out.push(Value::Variant(c.name.clone(), a));
                        }
                    }
                    out
                }
            }
        }
    }
}

fn mentions(m: &Module, ty: &Ty, q: &str) -> bool {
    fn walk(m: &Module, ty: &Ty, q: &str, seen: &mut Vec<String>) -> bool {
        match ty {
            Ty::List(e) => walk(m, e, q, seen),
            Ty::Tuple(ts) => ts.iter().any(|t| walk(m, t, q, seen)),
            Ty::Named(n) if n == q => true,
            Ty::Named(n) => {
                if seen.contains(n) {
                    return false;
                }
                seen.push(n.clone());
                match m.types.get(n).map(|t| &t.kind) {
                    Some(TypeKind::Record(fs)) => fs.iter().any(|(_, t)| walk(m, t, q, seen)),
                    Some(TypeKind::Variant(cs)) => cs.iter().any(|c| c.fields.iter().any(|t| walk(m, t, q, seen))),
                    None => false,
                }
            }
            _ => false,
        }
    }
    walk(m, ty, q, &mut vec![])
}

/// Every argument tuple for `params`, up to `limit` tuples.
pub fn enumerate_args(m: &Module, params: &[(String, Ty)], d: &Domain, limit: usize) -> Vec<Vec<Value>> {
    let cs: Vec<Vec<Value>> = params.iter().map(|(_, t)| enumerate(m, t, d, limit)).collect();
    product(&cs, limit)
}

/// A random value of `ty`. Integers are drawn from the domain's range,
/// with occasional values far outside it.
pub fn random_value<R: Rng>(m: &Module, ty: &Ty, d: &Domain, rng: &mut R) -> Value {
    random_depth(m, ty, d, rng, d.max_depth)
}

fn random_int<R: Rng>(d: &Domain, rng: &mut R) -> i64 {
    if rng.gen_bool(0.1) {
        rng.gen_range(-10_000..=10_000)
    } else {
        rng.gen_range(d.int_lo..=d.int_hi)
    }
}

fn random_depth<R: Rng>(m: &Module, ty: &Ty, d: &Domain, rng: &mut R, depth: usize) -> Value {
    match ty {
        Ty::Int => Value::int(random_int(d, rng)),
        Ty::Rat => {
            let den = rng.gen_range(1..=4i64);
            Value::Rat(BigRational::new(BigInt::from(random_int(d, rng)), BigInt::from(den)))
        }
        Ty::Bool => Value::Bool(rng.gen()),
        Ty::Tuple(ts) => Value::Tuple(ts.iter().map(|t| random_depth(m, t, d, rng, depth)).collect()),
        Ty::List(e) => {
            let n = rng.gen_range(0..=d.max_list);
            Value::List((0..n).map(|_| random_depth(m, e, d, rng, depth)).collect())
        }
        Ty::Named(q) => {
            let info = m.types.get(q).unwrap_or_else(|| panic!("unknown type {q}"));
            match &info.kind {
                TypeKind::Record(fs) => Value::Record(
                    info.name.clone(),
                    fs.iter().map(|(f, t)| (f.clone(), random_depth(m, t, d, rng, depth))).collect(),
                ),
                TypeKind::Variant(cs) => {
                    let allowed: Vec<_> = cs
                        .iter()
                        .filter(|c| depth > 0 || !c.fields.iter().any(|t| mentions(m, t, q)))
                        .collect();
                    let c = allowed[rng.gen_range(0..allowed.len())];
                    let next = depth.saturating_sub(1);
                    Value::Variant(c.name.clone(), c.fields.iter().map(|t| random_depth(m, t, d, rng, next)).collect())
                }
            }
        }
    }
}

pub fn random_args<R: Rng>(m: &Module, params: &[(String, Ty)], d: &Domain, rng: &mut R) -> Vec<Value> {
    params.iter().map(|(_, t)| random_value(m, t, d, rng)).collect()
}
