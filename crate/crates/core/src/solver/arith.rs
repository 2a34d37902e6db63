//! Linear arithmetic over integers and rationals: equality elimination with
//! unimodular substitution, Fourier-Motzkin elimination with integer
//! tightening, and branch and bound.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational as Q;
use num_traits::{One, Signed, Zero};
use std::collections::BTreeMap;

pub type Coeffs = BTreeMap<usize, Q>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Rel {
    Le,
    Lt,
    Eq,
}

/// `sum(c_i * x_i) + k  rel  0`
#[derive(Debug, Clone, PartialEq)]
pub struct Con {
    pub c: Coeffs,
    pub k: Q,
    pub rel: Rel,
}

#[derive(Debug)]
pub struct OutOfBudget;

pub struct Budget {
    pub left: u64,
}

impl Budget {
    pub fn tick(&mut self, n: u64) -> Result<(), OutOfBudget> {
        if self.left < n {
            self.left = 0;
            return Err(OutOfBudget);
        }
        self.left -= n;
        Ok(())
    }
}

pub enum ArithResult {
    Sat(Vec<Q>),
    Unsat,
    Unknown,
}

fn lcm_den(c: &Coeffs, k: &Q) -> BigInt {
    let mut l = k.denom().clone();
    for v in c.values() {
        l = l.lcm(v.denom());
    }
    l
}

fn is_integral_con(c: &Coeffs, is_int: &[bool]) -> bool {
    c.keys().all(|v| is_int[*v])
}

fn floor(q: &Q) -> BigInt {
    q.floor().to_integer()
}

fn ceil(q: &Q) -> BigInt {
    q.ceil().to_integer()
}

/// Normalizes an inequality: integer tightening when every variable is an
/// integer, otherwise scaling by a positive constant. Returns `None` when the
/// constraint is trivially true and `Some(Err(()))` when trivially false.
fn normalize(mut con: Con, is_int: &[bool]) -> Option<Result<Con, ()>> {
    con.c.retain(|_, v| !v.is_zero());
    if con.c.is_empty() {
        let ok = match con.rel {
            Rel::Le => !con.k.is_positive(),
            Rel::Lt => con.k.is_negative(),
            Rel::Eq => con.k.is_zero(),
        };
        return if ok { None } else { Some(Err(())) };
    }
    let l = Q::from_integer(lcm_den(&con.c, &con.k));
    for v in con.c.values_mut() {
        *v *= &l;
    }
    con.k *= &l;
    let mut g = BigInt::zero();
    for v in con.c.values() {
        g = g.gcd(v.numer());
    }
    if is_integral_con(&con.c, is_int) {
        match con.rel {
            Rel::Lt => {
                con.k += Q::one();
                con.rel = Rel::Le;
                let gq = Q::from_integer(g);
                for v in con.c.values_mut() {
                    *v /= &gq;
                }
                con.k = Q::from_integer(ceil(&(&con.k / &gq)));
            }
            Rel::Le => {
                let gq = Q::from_integer(g);
                for v in con.c.values_mut() {
                    *v /= &gq;
                }
                con.k = Q::from_integer(ceil(&(&con.k / &gq)));
            }
            Rel::Eq => {
                if !(con.k.numer() % &g).is_zero() {
                    return Some(Err(()));
                }
                let gq = Q::from_integer(g);
                for v in con.c.values_mut() {
                    *v /= &gq;
                }
                con.k /= &gq;
            }
        }
    } else {
        let g = g.gcd(con.k.numer());
        if !g.is_zero() && !g.is_one() {
            let gq = Q::from_integer(g);
            for v in con.c.values_mut() {
                *v /= &gq;
            }
            con.k /= &gq;
        }
    }
    Some(Ok(con))
}

/// Substitutes `x := e + ek` into a constraint.
fn substitute(con: &mut Con, x: usize, e: &Coeffs, ek: &Q) {
    if let Some(a) = con.c.remove(&x) {
        for (v, b) in e {
            let entry = con.c.entry(*v).or_insert_with(Q::zero);
            *entry += &a * b;
        }
        con.c.retain(|_, v| !v.is_zero());
        con.k += &a * ek;
    }
}

struct Sub {
    var: usize,
    e: Coeffs,
    k: Q,
}

/// Decides a conjunction of linear constraints. `is_int[i]` marks integer variables.
pub fn solve(is_int: &[bool], cons: Vec<Con>, budget: &mut Budget) -> Result<ArithResult, OutOfBudget> {
    let mut is_int = is_int.to_vec();
    let nvars = is_int.len();
    let mut eqs = Vec::new();
    let mut ineqs = Vec::new();
    for c in cons {
        match normalize(c, &is_int) {
            None => {}
            Some(Err(())) => return Ok(ArithResult::Unsat),
            Some(Ok(c)) if c.rel == Rel::Eq => eqs.push(c),
            Some(Ok(c)) => ineqs.push(c),
        }
    }
    let mut subs: Vec<Sub> = Vec::new();
    while let Some(eq) = eqs.pop() {
        budget.tick(1)?;
        let eq = match normalize(eq, &is_int) {
            None => continue,
            Some(Err(())) => return Ok(ArithResult::Unsat),
            Some(Ok(e)) => e,
        };
        let rat_var = eq.c.keys().copied().find(|v| !is_int[*v]);
        let unit = eq.c.iter().find(|(_, a)| a.abs().is_one()).map(|(v, _)| *v);
        let (x, e, ek, keep) = if let Some(x) = rat_var.or(unit) {
            let a = eq.c[&x].clone();
            let e: Coeffs = eq.c.iter().filter(|(v, _)| **v != x).map(|(v, b)| (*v, -b / &a)).collect();
            let ek = -&eq.k / &a;
            (x, e, ek, None)
        } else {
            // Unimodular step: x_k = t - sum(floor(a_i/m) x_i) - floor(k/m).
            let (&k, m) = eq.c.iter().min_by(|a, b| a.1.abs().cmp(&b.1.abs())).unwrap();
            let mut eq = eq.clone();
            if m.is_negative() {
                for v in eq.c.values_mut() {
                    *v = -v.clone();
                }
                eq.k = -eq.k.clone();
            }
            let m = eq.c[&k].to_integer();
            let t = is_int.len();
            is_int.push(true);
            let mut e = Coeffs::new();
            e.insert(t, Q::one());
            for (v, a) in &eq.c {
                if *v != k {
                    let q = a.to_integer().div_floor(&m);
                    if !q.is_zero() {
                        e.insert(*v, Q::from_integer(-q));
                    }
                }
            }
            let ek = Q::from_integer(-eq.k.to_integer().div_floor(&m));
            (k, e, ek, Some(eq))
        };
        for c in eqs.iter_mut().chain(ineqs.iter_mut()) {
            substitute(c, x, &e, &ek);
        }
        if let Some(mut eq) = keep {
            substitute(&mut eq, x, &e, &ek);
            eqs.push(eq);
        }
        subs.push(Sub { var: x, e, k: ek });
    }
    let mut reduced = Vec::new();
    for c in ineqs {
        match normalize(c, &is_int) {
            None => {}
            Some(Err(())) => return Ok(ArithResult::Unsat),
            Some(Ok(c)) => reduced.push(c),
        }
    }
    let Some(mut vals) = branch_and_bound(&is_int, reduced, budget, 0)? else {
        return Ok(ArithResult::Unsat);
    };
    for s in subs.iter().rev() {
        let mut v = s.k.clone();
        for (y, a) in &s.e {
            v += a * &vals[*y];
        }
        vals[s.var] = v;
    }
    vals.truncate(nvars);
    Ok(ArithResult::Sat(vals))
}

enum Fm {
    Sat(Vec<Q>),
    Unsat,
    Branch(usize, BigInt),
}

const MAX_BRANCH_DEPTH: usize = 64;

fn branch_and_bound(is_int: &[bool], cons: Vec<Con>, budget: &mut Budget, depth: usize) -> Result<Option<Vec<Q>>, OutOfBudget> {
    match fm(is_int, cons.clone(), budget)? {
        Fm::Sat(v) => Ok(Some(v)),
        Fm::Unsat => Ok(None),
        Fm::Branch(v, f) => {
            if depth >= MAX_BRANCH_DEPTH {
                return Err(OutOfBudget);
            }
            let le = Con { c: [(v, Q::one())].into_iter().collect(), k: Q::from_integer(-f.clone()), rel: Rel::Le };
            let ge = Con { c: [(v, -Q::one())].into_iter().collect(), k: Q::from_integer(f + 1), rel: Rel::Le };
            let order = if le.k.is_positive() { [ge, le] } else { [le, ge] };
            for extra in order {
                let mut next = cons.clone();
                next.push(extra);
                if let Some(vals) = branch_and_bound(is_int, next, budget, depth + 1)? {
                    return Ok(Some(vals));
                }
            }
            Ok(None)
        }
    }
}

struct Elim {
    var: usize,
    /// Constraints mentioning `var` when it was eliminated.
    bounds: Vec<Con>,
}

fn fm(is_int: &[bool], cons: Vec<Con>, budget: &mut Budget) -> Result<Fm, OutOfBudget> {
    let n = is_int.len();
    let mut cons = dedup(cons);
    let mut elims: Vec<Elim> = Vec::new();
    loop {
        budget.tick(cons.len() as u64 + 1)?;
        let mut counts: BTreeMap<usize, (usize, usize)> = BTreeMap::new();
        for c in &cons {
            for (v, a) in &c.c {
                let e = counts.entry(*v).or_insert((0, 0));
                if a.is_positive() {
                    e.0 += 1;
                } else {
                    e.1 += 1;
                }
            }
        }
        let Some((&var, _)) = counts.iter().min_by_key(|(v, (p, q))| (p * q, **v)) else { break };
        let (with, without): (Vec<Con>, Vec<Con>) = cons.into_iter().partition(|c| c.c.contains_key(&var));
        let uppers: Vec<&Con> = with.iter().filter(|c| c.c[&var].is_positive()).collect();
        let lowers: Vec<&Con> = with.iter().filter(|c| c.c[&var].is_negative()).collect();
        let mut next = without;
        budget.tick((uppers.len() * lowers.len()) as u64)?;
        for u in &uppers {
            for l in &lowers {
                let au = u.c[&var].clone();
                let al = -l.c[&var].clone();
                let mut c = Coeffs::new();
                for (v, a) in &u.c {
                    *c.entry(*v).or_insert_with(Q::zero) += a / &au;
                }
                for (v, a) in &l.c {
                    *c.entry(*v).or_insert_with(Q::zero) += a / &al;
                }
                c.remove(&var);
                let k = &u.k / &au + &l.k / &al;
                let rel = if u.rel == Rel::Lt || l.rel == Rel::Lt { Rel::Lt } else { Rel::Le };
                match normalize(Con { c, k, rel }, is_int) {
                    None => {}
                    Some(Err(())) => return Ok(Fm::Unsat),
                    Some(Ok(c)) => next.push(c),
                }
            }
        }
        elims.push(Elim { var, bounds: with });
        cons = dedup(next);
        if cons.len() > 20_000 {
            return Err(OutOfBudget);
        }
    }
    let mut vals = vec![Q::zero(); n];
    for el in elims.iter().rev() {
        let mut lo: Option<(Q, bool)> = None;
        let mut hi: Option<(Q, bool)> = None;
        for c in &el.bounds {
            let a = c.c[&el.var].clone();
            let mut rest = c.k.clone();
            for (v, b) in &c.c {
                if *v != el.var {
                    rest += b * &vals[*v];
                }
            }
            let bound = -rest / &a;
            let strict = c.rel == Rel::Lt;
            if a.is_positive() {
                if hi.as_ref().is_none_or(|(h, s)| bound < *h || (bound == *h && strict && !s)) {
                    hi = Some((bound, strict));
                }
            } else if lo.as_ref().is_none_or(|(l, s)| bound > *l || (bound == *l && strict && !s)) {
                lo = Some((bound, strict));
            }
        }
        match pick(is_int[el.var], lo.as_ref(), hi.as_ref()) {
            Ok(v) => vals[el.var] = v,
            Err(f) => return Ok(Fm::Branch(el.var, f)),
        }
    }
    Ok(Fm::Sat(vals))
}

/// Chooses the value nearest zero within the bounds. For integers with no
/// integer in range, returns the floor of the lower bound to branch on.
fn pick(int: bool, lo: Option<&(Q, bool)>, hi: Option<&(Q, bool)>) -> Result<Q, BigInt> {
    if int {
        let ilo = lo.map(|(l, s)| if *s { floor(l) + 1 } else { ceil(l) });
        let ihi = hi.map(|(h, s)| if *s { ceil(h) - 1 } else { floor(h) });
        if let (Some(a), Some(b)) = (&ilo, &ihi) {
            if a > b {
                return Err(floor(&lo.unwrap().0));
            }
        }
        let mut v = BigInt::zero();
        if let Some(a) = ilo {
            v = v.max(a);
        }
        if let Some(b) = ihi {
            v = v.min(b);
        }
        return Ok(Q::from_integer(v));
    }
    let zero = Q::zero();
    let above = |x: &Q| match lo {
        Some((l, s)) => x > l || (!s && x == l),
        None => true,
    };
    let below = |x: &Q| match hi {
        Some((h, s)) => x < h || (!s && x == h),
        None => true,
    };
    if above(&zero) && below(&zero) {
        return Ok(zero);
    }
    if !above(&zero) {
        let (l, s) = lo.unwrap();
        let c = if !s && l.is_integer() { l.clone() } else { Q::from_integer(floor(l) + 1) };
        if below(&c) {
            return Ok(c);
        }
        let (h, _) = hi.unwrap();
        return Ok((l + h) / Q::from_integer(BigInt::from(2)));
    }
    let (h, s) = hi.unwrap();
    let c = if !s && h.is_integer() { h.clone() } else { Q::from_integer(ceil(h) - 1) };
    if above(&c) {
        return Ok(c);
    }
    let (l, _) = lo.unwrap();
    Ok((l + h) / Q::from_integer(BigInt::from(2)))
}

/// Keeps the strongest of constraints sharing a coefficient vector.
fn dedup(cons: Vec<Con>) -> Vec<Con> {
    let mut best: BTreeMap<Vec<(usize, Q)>, (Q, Rel)> = BTreeMap::new();
    for c in cons {
        let key: Vec<(usize, Q)> = c.c.iter().map(|(v, a)| (*v, a.clone())).collect();
        match best.get(&key) {
            Some((k, rel)) => {
                let stronger = c.k > *k || (c.k == *k && c.rel == Rel::Lt && *rel == Rel::Le);
                if stronger {
                    best.insert(key, (c.k, c.rel));
                }
            }
            None => {
                best.insert(key, (c.k, c.rel));
            }
        }
    }
    best.into_iter().map(|(key, (k, rel))| Con { c: key.into_iter().collect(), k, rel }).collect()
}
