use super::*;
use crate::taxonomy::{ErrorLabelSet, ErrorType};

fn req(id: &str) -> CompletionRequest {
    CompletionRequest::new(Role::Detector, "sys", "user").with_sample(id)
}

#[test]
fn fixed_responder() {
    let b = FixedResponder::new("[ERR]_∅").with_sample("q1", "[ERR]_7");
    assert_eq!(b.complete(&req("q0")).unwrap(), "[ERR]_∅");
    assert_eq!(b.complete(&req("q1")).unwrap(), "[ERR]_7");
    let r = CompletionRequest::new(Role::Refiner, "a", "b");
    let b = FixedResponder::default().with_fingerprint(r.fingerprint(), "SELECT 1");
    assert_eq!(b.complete(&r).unwrap(), "SELECT 1");
    assert!(b.complete(&CompletionRequest::new(Role::Refiner, "a", "c")).is_err());
    assert_eq!(b.calls(), 2);
}

#[test]
fn failing_backend_times_out_after_attempts() {
    let b = FailingBackend::new(2);
    assert_eq!(b.complete(&req("x")), Err(BackendError::Timeout));
    assert_eq!(b.attempts(), 3);
}

#[test]
fn retry_stops_on_auth() {
    let mut n = 0;
    let r = RetryPolicy::immediate(5).run(|_| {
        n += 1;
        Err(BackendError::Auth("401".into()))
    });
    assert!(matches!(r, Err(BackendError::Auth(_))));
    assert_eq!(n, 1);
    let mut n = 0;
    let r = RetryPolicy::immediate(5).run(|a| {
        n += 1;
        if a < 2 {
            Err(BackendError::Transport("reset".into()))
        } else {
            Ok("ok".into())
        }
    });
    assert_eq!(r.unwrap(), "ok");
    assert_eq!(n, 3);
}

#[test]
fn oracle_answers() {
    let fx = vec![
        OracleFixture {
            sample_id: "a".into(),
            gold_sql: Some("SELECT 1".into()),
            labels: ErrorLabelSet::from_labels([ErrorType::ValueError, ErrorType::TableMissing]),
            localizations: vec![],
        },
        OracleFixture {
            sample_id: "b".into(),
            gold_sql: Some("SELECT 2".into()),
            labels: ErrorLabelSet::NoError,
            localizations: vec![],
        },
    ];
    let o = make_oracle(&fx).unwrap();
    let mut toks: Vec<String> = o
        .detector
        .complete(&req("a"))
        .unwrap()
        .split_whitespace()
        .map(str::to_string)
        .collect();
    toks.sort();
    assert_eq!(toks, vec!["[ERR]_6", "[ERR]_7"]);
    assert_eq!(o.detector.complete(&req("b")).unwrap(), "[ERR]_∅");
    assert_eq!(o.refiner.complete(&req("b")).unwrap(), "SELECT 2");
    assert!(matches!(o.refiner.complete(&req("zz")), Err(BackendError::MissingGold(_))));
    let mut missing = fx[0].clone();
    missing.gold_sql = None;
    assert!(matches!(make_oracle(&[missing]), Err(BackendError::MissingGold(_))));
}

#[test]
fn fingerprint_is_stable() {
    let a = req("x").fingerprint();
    assert_eq!(a, req("y").fingerprint());
    assert_eq!(a.len(), 64);
    assert_ne!(a, CompletionRequest::new(Role::Refiner, "sys", "user").fingerprint());
}

#[test]
fn config_validation() {
    assert!(BackendConfig::default().validate().is_ok());
    let bad = BackendConfig {
        timeout_secs: 0.0,
        ..BackendConfig::default()
    };
    assert!(bad.validate().is_err());
    let bad = BackendConfig {
        temperature: -1.0,
        ..BackendConfig::default()
    };
    assert!(bad.validate().is_err());
}
