use num_bigint::BigInt;
use num_rational::BigRational as Q;
use regionforge_core::lang::ast::{BinOp, Ty};
use regionforge_core::lang::load;
use regionforge_core::solver::*;
use std::sync::Arc;

fn int(n: i64) -> LinExpr {
    LinExpr::constant(Q::from_integer(BigInt::from(n)))
}

fn var(name: &str) -> LinExpr {
    LinExpr::atom(Atom::Param(name.into()))
}

fn module() -> Arc<regionforge_core::lang::Module> {
    load("t.mml", "type priority = Standard | Premium\n").unwrap()
}

#[test]
fn canonical_bounds() {
    let gt = Formula::num_rel(BinOp::Gt, NumKind::Int, &var("x"), &int(100));
    let cs = canonicalize(&[gt.clone(), gt, TRUE]);
    assert_eq!(cs.len(), 1);
    assert_eq!(cs[0].to_string(), "x >= 101");
    assert!(canonicalize(&[]).is_empty());
    let b = Formula::Var(Atom::Param("b".into()));
    let c = Formula::Var(Atom::Param("c".into()));
    assert_eq!(canonicalize(&[Formula::and(vec![b.clone(), c.clone()])]), vec![b, c]);
}

#[test]
fn contradictory_bounds() {
    let m = module();
    let cs = [
        Formula::num_rel(BinOp::Gt, NumKind::Int, &var("x"), &int(100)),
        Formula::num_rel(BinOp::Le, NumKind::Int, &var("x"), &int(100)),
    ];
    assert_eq!(check_sat(&m, &canonicalize(&cs), DEFAULT_BUDGET), SatResult::Unsat);
}

#[test]
fn small_witness() {
    let m = module();
    let sig = Arc::new(AdtSig {
        ty: Ty::Named("t::priority".into()),
        ctors: vec!["Standard".into(), "Premium".into()],
        arities: vec![0, 0],
        base: 0,
    });
    let cust = Atom::Param("o".into()).field("customer");
    let amount = LinExpr::atom(Atom::Param("o".into()).field("amount"));
    let cs = [
        Formula::not(Formula::IsCtor(cust.clone(), sig.clone(), 1)),
        Formula::num_rel(BinOp::Ge, NumKind::Int, &amount, &int(101)),
    ];
    let cs = canonicalize(&cs);
    assert_eq!(cs[0].to_string(), "not (o.customer = Premium)");
    assert_eq!(cs[1].to_string(), "o.amount >= 101");
    let SatResult::Sat(model) = check_sat(&m, &cs, DEFAULT_BUDGET) else { panic!() };
    assert_eq!(model.nums.values().next().unwrap(), &Q::from_integer(BigInt::from(101)));
    assert_eq!(model.ctors.get(&cust).copied().unwrap_or(sig.base), 0);
}

#[test]
fn nonlinear_is_unknown() {
    let m = module();
    let sq = Atom::Arith(ArithOp::Mul, NumKind::Int, Arc::new(var("x")), Arc::new(var("x")));
    let cs = [Formula::num_rel(BinOp::Eq, NumKind::Int, &LinExpr::atom(sq), &int(2))];
    assert_eq!(check_sat(&m, &cs, DEFAULT_BUDGET), SatResult::Unknown(UnknownReason::Nonlinear));
}

#[test]
fn integer_equalities() {
    let m = module();
    // 3x + 5y = 7 has no solution with both variables non-negative.
    let lhs = var("x").scale(&Q::from_integer(3.into())).add(&var("y").scale(&Q::from_integer(5.into())));
    let cs = [
        Formula::num_rel(BinOp::Eq, NumKind::Int, &lhs, &int(7)),
        Formula::num_rel(BinOp::Ge, NumKind::Int, &var("x"), &int(0)),
        Formula::num_rel(BinOp::Ge, NumKind::Int, &var("y"), &int(0)),
    ];
    let brute = (0..10).any(|x| (0..10).any(|y| 3 * x + 5 * y == 7));
    assert_eq!(check_sat(&m, &cs, DEFAULT_BUDGET).is_unsat(), !brute);
    let cs2 = [Formula::num_rel(BinOp::Eq, NumKind::Int, &lhs, &int(8))];
    let SatResult::Sat(model) = check_sat(&m, &cs2, DEFAULT_BUDGET) else { panic!() };
    let v = ModelValuation { model: &model, module: &m };
    assert_eq!(eval_formula(&cs2[0], &v), Some(true));
}
