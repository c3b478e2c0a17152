use tscrub::external::{external_method, parse_spec, run_external};
use tscrub_core::benchmark::{classify_gaps, evaluate_methods, BenchmarkConfig};
use tscrub_core::impute::{ImputeError, MethodRegistry};
use tscrub_core::MethodId;

fn id() -> MethodId {
    MethodId::new("ext")
}

#[test]
fn cat_is_identity_on_gap_free_input() {
    let values = [Some(1.5), Some(-2.0), Some(1e-7)];
    assert_eq!(run_external(&id(), "cat", &values).unwrap(), [1.5, -2.0, 1e-7]);
}

#[test]
fn cat_leaves_gaps_and_breaks_the_contract() {
    let err = external_method("ext", "cat").apply(&[Some(1.0), None]).unwrap_err();
    assert!(matches!(err, ImputeError::ContractViolation { .. }), "{err}");
}

#[test]
fn wrong_length_is_a_contract_violation() {
    let err = external_method("ext", "head -n 1").apply(&[Some(1.0), Some(2.0)]).unwrap_err();
    match err {
        ImputeError::ContractViolation { reason, .. } => assert!(reason.contains("1 lines for 2"), "{reason}"),
        other => panic!("{other}"),
    }
}

#[test]
fn nonzero_exit_is_child_failure() {
    let err = external_method("ext", "echo broken >&2; exit 3").apply(&[Some(1.0)]).unwrap_err();
    match err {
        ImputeError::MethodFailed { reason, .. } => assert!(reason.contains("broken"), "{reason}"),
        other => panic!("{other}"),
    }
}

#[test]
fn fills_through_a_script() {
    // fill gaps with zero
    let m = external_method("zero", "sed 's/^$/0/'");
    assert_eq!(m.apply(&[Some(4.0), None, Some(6.0)]).unwrap(), [4.0, 0.0, 6.0]);
}

#[test]
fn benchmarks_alongside_builtins() {
    let mut registry = MethodRegistry::with_defaults();
    registry.register(external_method("zero", "sed 's/^$/0/'")).unwrap();
    let values: Vec<Option<f64>> = (0..200).map(|i| (i != 100).then_some(10.0 + (i as f64 / 5.0).sin())).collect();
    let mut cfg = BenchmarkConfig::default();
    cfg.methods.push(MethodId::new("zero"));
    let (mcar, mar) = evaluate_methods(&values, &classify_gaps(&values), &cfg, &registry).unwrap();
    let mcar = mcar.unwrap();
    assert_eq!(mcar.len(), 5);
    assert!(mar.is_none());
    assert!(mcar.get("zero").unwrap() > mcar.get("na_interpolation").unwrap());
}

#[test]
fn spec_parsing() {
    assert_eq!(parse_spec("mean=./fill.sh --x"), Some(("mean".into(), "./fill.sh --x".into())));
    assert_eq!(parse_spec("=cat"), None);
    assert_eq!(parse_spec("cat"), None);
}
