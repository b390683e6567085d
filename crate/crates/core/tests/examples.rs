use std::f64::consts::SQRT_2;

use metric_distortion::lab::{
    actual_distortion, evaluate, generate_lower_bound, ideal_distortion, lambda_check, Exactness, LowerBoundKind,
};
use metric_distortion::metric::MetricInstance;
use metric_distortion::rules::{bound_value, CandidateCount, RuleId};
use metric_distortion::search::{brute_force_best, optimize_thresholds, verify_suite, Suite};
use metric_distortion::tournament::majority_graph;
use metric_distortion::Error;

const LINE: &str = r#"{
  "space": {"type": "line", "positions": {"P": 0, "Q": 1, "v": 0.25}},
  "voters": ["v"],
  "candidates": ["P", "Q"]
}"#;

#[test]
fn json_line_instance() {
    let inst = MetricInstance::from_json(LINE).unwrap();
    let r = evaluate(&inst, &RuleId::Rule1(2.0)).unwrap();
    assert_eq!(r.winner, "P");
    assert_eq!(r.delta, 1.0);
    assert_eq!(r.margin, r.bound - 1.0);
}

#[test]
fn json_matrix_triangle_violation() {
    let text = r#"{"space": {"type": "matrix", "ids": ["a", "b", "c"],
        "distances": [0, 1, 5, 1, 0, 1, 5, 1, 0]},
        "voters": ["a"], "candidates": ["b", "c"]}"#;
    match MetricInstance::from_json(text) {
        Err(Error::MetricViolation { points, .. }) => assert_eq!(points, ["a", "b", "c"]),
        other => panic!("expected a metric violation, got {other:?}"),
    }
}

#[test]
fn json_unknown_field_and_unknown_id() {
    let extra = r#"{"space": {"type": "line", "positions": {"P": 0, "Q": 1}}, "voters": ["P"], "candidates": ["P", "Q"], "x": 1}"#;
    assert!(matches!(MetricInstance::from_json(extra), Err(Error::Parse(_))));
    let unknown = r#"{"space": {"type": "line", "positions": {"P": 0, "Q": 1}}, "voters": ["w"], "candidates": ["P", "Q"]}"#;
    assert_eq!(MetricInstance::from_json(unknown).unwrap_err(), Error::UnknownId("w".into()));
}

#[test]
fn unanimous_instance_has_unit_distortion_for_every_rule() {
    let inst = MetricInstance::line([("P", 0.0), ("Q", 1.0), ("a", 0.0), ("b", 0.0)], &["a", "b"], &["P", "Q"]).unwrap();
    for rule in [RuleId::Rule1(2.0), RuleId::Rule2(2.0), RuleId::Rule3(2.0), RuleId::Rule5] {
        let r = evaluate(&inst, &rule).unwrap();
        assert_eq!(r.winner, "P");
        assert_eq!(r.delta, 1.0);
    }
}

#[test]
fn three_candidates_report_uncovered_set() {
    let inst = MetricInstance::euclidean(
        2,
        [
            ("a", vec![0.0, 0.0]),
            ("b", vec![1.0, 0.0]),
            ("c", vec![0.0, 1.0]),
            ("v1", vec![0.1, 0.1]),
            ("v2", vec![0.9, 0.2]),
            ("v3", vec![0.3, 0.8]),
        ],
        &["v1", "v2", "v3"],
        &["a", "b", "c"],
    )
    .unwrap();
    let r = evaluate(&inst, &RuleId::Rule1(2.0)).unwrap();
    let unc = r.uncovered_set.clone().unwrap();
    assert!(unc.contains(&r.winner));
    assert!(r.delta <= bound_value(&RuleId::Rule1(2.0), CandidateCount::Many).unwrap());
    assert!(matches!(r.ideal_exactness, Exactness::Iterative { converged: true, .. }));
    let g = majority_graph(&inst, &RuleId::Rule1(2.0)).unwrap();
    assert_eq!(g.edges().len(), 3);
}

#[test]
fn sqrt2_instance_end_to_end() {
    let inst = generate_lower_bound(LowerBoundKind::ExactSqrt2, 1e-6, 5).unwrap();
    let (p, q) = (inst.resolve("P").unwrap(), inst.resolve("Q").unwrap());
    assert!((actual_distortion(&inst, p).unwrap() - SQRT_2).abs() < 1e-12);
    assert_eq!(brute_force_best(&inst).0, q);
    let (rho, exact) = ideal_distortion(&inst, p).unwrap();
    assert_eq!(exact, Exactness::Exact);
    assert!(rho >= SQRT_2 - 1e-12);
    assert!(lambda_check(&inst, p, q, p, 2.0).unwrap());
}

#[test]
fn json_round_trip_of_generated_instance() {
    let inst = generate_lower_bound(LowerBoundKind::Pair(1.5, 3.0), 1e-6, 2).unwrap();
    let back = MetricInstance::from_json(&inst.to_json()).unwrap();
    assert_eq!(back.to_spec(), inst.to_spec());
}

#[test]
fn optimizer_converges_toward_sqrt2() {
    let o = optimize_thresholds(8).unwrap();
    assert!(o.bound - SQRT_2 < 0.05);
    assert_eq!(o.taus.len(), 8);
}

#[test]
fn quick_suites_pass() {
    for suite in [Suite::LowerBounds, Suite::Condition1] {
        let r = verify_suite(suite, 7);
        assert!(r.passed(), "{}", r.to_table());
        assert!(r.to_json().contains("\"checks\""));
    }
}
