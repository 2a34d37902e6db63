use proptest::prelude::*;
use rand::rngs::StdRng;
use rand::SeedableRng;
use regionforge_core::decomp::{decompose, DecompOptions};
use regionforge_core::lang::Ty;
use regionforge_core::metrics::{aggregate_scores, decimal_text, load_assessments, state_space_score, MetricKind, ScoreTable};
use regionforge_corpus::testkit::{enumerate, random_value, Domain};
use regionforge_corpus::{fixture_path, load_corpus, load_model, Expected};

#[test]
fn every_corpus_model_admits() {
    let entries = load_corpus();
    assert_eq!(entries.len(), 5);
    for e in &entries {
        let m = load_model(e.id).unwrap_or_else(|err| panic!("{}: {err}", e.id));
        for x in &e.expected {
            let (Expected::Regions { target, .. } | Expected::Verdict { target, .. } | Expected::Instance { target, .. }) = x;
            assert!(m.function(target).is_some(), "{}: no function {target}", e.id);
        }
        for t in &e.targets {
            assert!(m.function(t).is_some(), "{}: no target {t}", e.id);
        }
    }
}

#[test]
fn region_counts_match_expectations() {
    for e in load_corpus() {
        let m = load_model(e.id).unwrap();
        for x in &e.expected {
            if let Expected::Regions { target, count } = x {
                let r = decompose(&m, target, &DecompOptions::depth(e.depth)).unwrap();
                assert_eq!(r.regions.len(), *count, "{}::{target}", e.id);
                assert!(r.exhaustive);
            }
        }
    }
}

#[test]
fn state_space_fixture() {
    let rows = load_assessments(&fixture_path("q1.json")).unwrap();
    assert_eq!(rows.len(), 5);
    let report = aggregate_scores(&ScoreTable::from_assessments(&rows).unwrap()).unwrap();
    // Estimate 15 against 117: difference 102, score 1 / (1 + log2 103).
    let got = report.model("claude-opus-4.5").unwrap();
    let expected = 1.0 / (1.0 + 103f64.log2());
    let s: f64 = decimal_text(got.overall.as_ref().unwrap(), 12).parse().unwrap();
    assert!((s - expected).abs() < 1e-9, "{s} vs {expected}");
    assert!(report.metric(MetricKind::StateSpace).mean.is_some());
    assert_eq!(state_space_score(0), num_rational::BigRational::from_integer(1.into()));
}

#[test]
fn enumeration_is_exhaustive_for_small_types() {
    let m = load_model("netting").unwrap();
    let party = Ty::Named("netting::party".into());
    assert_eq!(enumerate(&m, &party, &Domain::small(), 100).len(), 3);
    let d = Domain { int_lo: -1, int_hi: 1, max_list: 2, max_depth: 2 };
    // [] plus 3 singletons plus 9 pairs
    assert_eq!(enumerate(&m, &Ty::list(Ty::Int), &d, 1000).len(), 13);
}

proptest! {
    #[test]
    fn random_values_have_their_type(seed in any::<u64>()) {
        let mut rng = StdRng::seed_from_u64(seed);
        for id in ["discount", "netting", "gtt", "ordering"] {
            let m = load_model(id).unwrap();
            for name in m.types.keys() {
                let ty = Ty::Named(name.clone());
                let v = random_value(&m, &ty, &Domain::small(), &mut rng);
                prop_assert!(v.has_type(&m, &ty), "{v} is not a {name}");
            }
        }
    }
}
