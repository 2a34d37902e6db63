use regionforge_core::decomp::*;
use regionforge_core::eval::{eval_call, Value};
use regionforge_core::lang::load;

const DISCOUNT: &str = "type priority = Standard | Premium
type order = { amount : int; customer : priority }

let discount (o : order) : int =
  match o.customer with
  | Premium -> if o.amount > 100 then 20 else 10
  | Standard -> if o.amount > 100 then 10 else 0

let premium_only (o : order) : bool = o.customer = Premium
";

fn order(amount: i64, c: &str) -> Value {
    Value::Record("order".into(), vec![("amount".into(), Value::int(amount)), ("customer".into(), Value::Variant(c.into(), vec![]))])
}

#[test]
fn discount_regions() {
    let m = load("discount.mml", DISCOUNT).unwrap();
    let r = decompose(&m, "discount", &DecompOptions::default()).unwrap();
    for reg in &r.regions {
        println!("{} {:?} -> {} sample {:?}", reg.id, reg.constraint_strings(), reg.invariant, reg.sample);
    }
    assert_eq!(r.regions.len(), 4);
    assert!(r.exhaustive);
    let id = classify_input(&m, &r, &[order(50, "Standard")]).unwrap().unwrap();
    assert_eq!(r.region(&id).unwrap().invariant, Invariant::Value(Value::int(0)));
    let id = classify_input(&m, &r, &[order(101, "Premium")]).unwrap().unwrap();
    assert_eq!(r.region(&id).unwrap().invariant, Invariant::Value(Value::int(20)));
    for reg in &r.regions {
        let Invariant::Value(v) = &reg.invariant else { panic!() };
        let args: Vec<Value> = reg.sample.as_ref().unwrap().iter().map(|(_, v)| v.clone()).collect();
        assert_eq!(&eval_call(&m, "discount", &args).unwrap(), v);
    }
}

#[test]
fn side_condition_restricts() {
    let m = load("discount.mml", DISCOUNT).unwrap();
    let opts = DecompOptions { side_condition: Some("premium_only".into()), ..DecompOptions::default() };
    let r = decompose(&m, "discount", &opts).unwrap();
    assert_eq!(r.regions.len(), 2);
    assert_eq!(classify_input(&m, &r, &[order(50, "Standard")]).unwrap(), None);
}

const SUMS: &str = "let rec total (xs : int list) : int =
  match xs with
  | [] -> 0
  | x :: rest -> if x > 0 then x + total rest else total rest

let nonneg (xs : int list) : bool = total xs >= 0
";

#[test]
fn path_budget_degrades_to_unknown() {
    let m = load("sums.mml", SUMS).unwrap();
    let full = decompose(&m, "total", &DecompOptions::depth(4)).unwrap();
    assert!(!full.stats.path_budget_exhausted);
    let capped = DecompOptions { max_paths: 3, ..DecompOptions::depth(4) };
    let r = decompose(&m, "total", &capped).unwrap();
    assert!(r.stats.path_budget_exhausted);
    assert!(!r.exhaustive);
    assert!(r.regions.len() < full.regions.len());

    use regionforge_core::verify::{verify_goal, Verdict};
    assert_eq!(verify_goal(&m, "nonneg", &DecompOptions::depth(4)).unwrap(), Verdict::ProvedUpToBound(4));
    match verify_goal(&m, "nonneg", &capped).unwrap() {
        Verdict::Unknown { reason, .. } => assert!(reason.contains("path budget"), "{reason}"),
        v => panic!("capped search must not prove: {v:?}"),
    }
}
