use regionforge_core::decomp::{decompose, DecompOptions};
use regionforge_core::lang::load;
use regionforge_core::testgen::*;

const DISCOUNT: &str = "type priority = Standard | Premium
type order = { amount : int; customer : priority }

let discount (o : order) : int =
  match o.customer with
  | Premium -> if o.amount > 100 then 20 else 10
  | Standard -> if o.amount > 100 then 10 else 0
";

#[test]
fn discount_vectors_render() {
    let m = load("discount.mml", DISCOUNT).unwrap();
    let r = decompose(&m, "discount", &DecompOptions::default()).unwrap();
    let vs = generate_tests(&r, &m).unwrap();
    assert_eq!(vs.len(), 4);
    assert!(vs.iter().all(|v| !v.is_skipped() && v.expected.is_some()));
    let text = render_tests(&vs, &m, &TemplateSpec::reference()).unwrap();
    println!("{text}");
    assert!(text.contains("- invariant: 0"));
    assert!(text.contains("not (o.customer = Premium)"));
    assert!(text.contains("o.amount >= 101"));
    assert!(text.contains("discount(o=order(101, Standard()))"));
    assert!(text.contains("class order:"));
    for i in 1..=4 {
        assert!(text.contains(&format!("def test_{i}():")));
    }
}

#[test]
fn stale_hash_rejected() {
    let m = load("discount.mml", DISCOUNT).unwrap();
    let r = decompose(&m, "discount", &DecompOptions::default()).unwrap();
    let m2 = load("discount.mml", &format!("{DISCOUNT}\nlet extra (x : int) : int = x\n")).unwrap();
    assert!(matches!(generate_tests(&r, &m2), Err(TestgenError::Stale { .. })));
}

#[test]
fn template_requires_expected() {
    let t = "--- test ---\ndef {name}():\n    \"\"\"{docstring}\"\"\"\n    assert {call}\n";
    assert_eq!(TemplateSpec::parse(t), Err(TestgenError::MissingPlaceholder("expected".into())));
}

#[test]
fn empty_vectors_render_header_only() {
    let m = load("discount.mml", DISCOUNT).unwrap();
    let t = TemplateSpec::reference();
    assert_eq!(render_tests(&[], &m, &t).unwrap(), t.header);
}

#[test]
fn vectors_serialize() {
    let m = load("discount.mml", DISCOUNT).unwrap();
    let r = decompose(&m, "discount", &DecompOptions::default()).unwrap();
    let vs = generate_tests(&r, &m).unwrap();
    let j = vectors_to_json(&vs);
    assert_eq!(j["vectors"].as_array().unwrap().len(), 4);
    assert_eq!(j["vectors"][0]["name"], "test_1");
}
