mod common;

#[test]
fn solver_fuzz_matches_brute_force() {
    common::solver_fuzz(1000).unwrap();
}

#[test]
fn random_inputs_classify_into_one_region() {
    common::classification(1000).unwrap();
}

#[test]
fn verdicts_replay_and_agree_with_sweeps() {
    common::verdict_soundness(true).unwrap();
}

#[test]
fn decomposition_json_is_deterministic() {
    common::determinism().unwrap();
}
