use super::*;
use crate::ast::{parse_sql, Dialect};
use crate::db::DatabaseCache;
use crate::exec::execute_on;
use crate::fixtures::{corpus, materialize, running_example as rx};
use crate::perturb::perturb;
use crate::taxonomy::{ErrorLabelSet, ErrorType};

#[test]
fn corpus_precision_and_inversion() {
    let dir = tempfile::tempdir().unwrap();
    materialize(dir.path()).unwrap();
    let dbs = DatabaseCache::new(dir.path());
    let mut applicable = std::collections::BTreeMap::new();
    for row in corpus() {
        let db = dbs.get(&row.db_id).unwrap();
        let conn = db.connect().unwrap();
        let ast = parse_sql(&row.gold_sql, Dialect::Sqlite).unwrap();
        let fb = execute_on(&conn, &row.gold_sql, 5000);
        assert_eq!(static_detect(Some(&ast), &db.schema, Some(&conn), &fb), ErrorLabelSet::NoError, "{}", row.gold_sql);
        for label in ErrorType::ALL.into_iter().filter(|l| l.has_static_rule()) {
            let out = perturb(&ast, &db.schema, &conn, label, 7).unwrap();
            if !out.is_applied() {
                continue;
            }
            *applicable.entry(label).or_insert(0) += 1;
            let sql = out.perturbed_sql.unwrap();
            let fb = execute_on(&conn, &sql, 5000);
            let found = static_detect(out.perturbed_ast.as_ref(), &db.schema, Some(&conn), &fb);
            assert!(found.contains(label), "{label}: {sql} -> {found:?}");
        }
    }
    println!("{applicable:?}");
}

#[test]
fn figure_examples() {
    let dir = tempfile::tempdir().unwrap();
    materialize(dir.path()).unwrap();
    let dbs = DatabaseCache::new(dir.path());
    let db = dbs.get(rx::DB_ID).unwrap();
    let conn = db.connect().unwrap();
    let run = |sql: &str| {
        let ast = parse_sql(sql, Dialect::Sqlite).ok();
        let fb = execute_on(&conn, sql, 5000);
        static_detect(ast.as_ref(), &db.schema, Some(&conn), &fb)
    };
    assert_eq!(run(rx::ERRONEOUS_SQL), ErrorLabelSet::single(ErrorType::ValueError));
    assert_eq!(run(rx::GOLD_SQL), ErrorLabelSet::NoError);
    assert_eq!(run("SELECT * FROM attendence"), ErrorLabelSet::single(ErrorType::TableMismatch));
    assert_eq!(
        run("SELECT s.name FROM student s CROSS JOIN enrollment e2"),
        ErrorLabelSet::single(ErrorType::TableRedundancy)
    );
    assert_eq!(run("SELECT nme FROM student"), ErrorLabelSet::single(ErrorType::AttributeMismatch));
    assert_eq!(run("SELECT FROM"), ErrorLabelSet::single(ErrorType::ClauseError));
}

mod semantic_stage {
    use super::*;
    use crate::backend::{BackendError, FixedResponder, FnBackend};
    use crate::corpus::Sample;
    use crate::exec::DEFAULT_TIMEOUT_MS;
    use std::sync::{Arc, Mutex};

    fn input() -> DetectionInput {
        DetectionInput {
            instructions: instructions(),
            question: "q".into(),
            schema: "s".into(),
            sql: "SELECT 1".into(),
            ast: "Query".into(),
            exec_feedback: "1 row(s)".into(),
            rule_results: Some(ErrorLabelSet::NoError),
        }
    }

    fn example_sample() -> Sample {
        Sample {
            question_id: rx::QUESTION_ID.into(),
            db_id: rx::DB_ID.into(),
            question: rx::QUESTION.into(),
            sql: rx::ERRONEOUS_SQL.into(),
            gold_sql: Some(rx::GOLD_SQL.into()),
        }
    }

    #[test]
    fn token_answers() {
        let b = FixedResponder::new("[ERR]_7");
        let (set, raw) = semantic_detect(&input(), &b, None, 2).unwrap();
        assert_eq!(set, ErrorLabelSet::single(ErrorType::ValueError));
        assert_eq!(raw, vec!["[ERR]_7"]);

        let b = FixedResponder::new("[ERR]_∅");
        let (set, raw) = semantic_detect(&input(), &b, None, 2).unwrap();
        assert!(set.is_no_error());
        assert_eq!(raw, vec!["[ERR]_∅"]);

        let b = FixedResponder::new("[ERR]_3, [ERR]_7 [ERR]_∅");
        assert!(semantic_detect(&input(), &b, None, 2).unwrap().0.is_no_error());
    }

    #[test]
    fn prose_is_rejected_after_retries() {
        let b = FixedResponder::new("The SQL has a value error");
        let err = semantic_detect(&input(), &b, None, 2).unwrap_err();
        assert!(matches!(err, DetectError::InvalidOutput(ref s) if s.contains("value error")));
        assert_eq!(b.calls(), 3);

        let b = FixedResponder::new("[ERR]_20");
        assert!(matches!(semantic_detect(&input(), &b, None, 0), Err(DetectError::InvalidOutput(_))));
        assert_eq!(b.calls(), 1);
    }

    #[test]
    fn retry_recovers() {
        let n = Arc::new(Mutex::new(0));
        let n2 = n.clone();
        let b = FnBackend::new("flaky", move |_| {
            let mut n = n2.lock().unwrap();
            *n += 1;
            Ok(if *n == 1 { "value error".into() } else { "[ERR]_8".into() })
        });
        let (set, _) = semantic_detect(&input(), &b, None, 2).unwrap();
        assert_eq!(set, ErrorLabelSet::single(ErrorType::ConditionMissing));
        assert_eq!(b.calls(), 2);
    }

    #[test]
    fn constrained_backends_get_the_allow_list() {
        let b = FnBackend::new("c", |req| {
            let allowed = req.allowed_tokens.as_ref().expect("allow-list sent");
            assert_eq!(allowed.len(), 13);
            assert!(allowed.iter().any(|t| t == "[ERR]_∅"));
            Ok("[ERR]_1".into())
        })
        .constrained();
        assert_eq!(semantic_detect(&input(), &b, None, 2).unwrap().0, ErrorLabelSet::single(ErrorType::AttributeMismatch));

        let b = FnBackend::new("c", |_| Ok("nope".into())).constrained();
        assert!(semantic_detect(&input(), &b, None, 2).is_err());
        assert_eq!(b.calls(), 1);
    }

    #[test]
    fn backend_errors_propagate() {
        let b = FnBackend::new("down", |_| Err(BackendError::Auth("no key".into())));
        assert!(matches!(semantic_detect(&input(), &b, None, 2), Err(DetectError::Backend(BackendError::Auth(_)))));
        assert_eq!(b.calls(), 1);
    }

    #[test]
    fn input_sections_follow_the_fixed_order() {
        let dir = tempfile::tempdir().unwrap();
        materialize(dir.path()).unwrap();
        let db = DatabaseCache::new(dir.path()).get(rx::DB_ID).unwrap();
        let conn = db.connect().unwrap();
        let sample = example_sample();
        let cx = prepare(&sample, &db.schema, Some(&conn), DEFAULT_TIMEOUT_MS);
        let rules = static_detect(cx.ast(), &db.schema, Some(&conn), &cx.feedback);
        let text = build_detection_input(&sample, &cx.qss, cx.ast.as_ref(), &cx.feedback, &rules).render();
        let order = ["### Error types", "### Question", "### Schema", "### SQL", "### AST", "### Execution result", "### Rule results"];
        let pos: Vec<usize> = order.iter().map(|h| text.find(h).unwrap_or_else(|| panic!("{h}"))).collect();
        assert!(pos.windows(2).all(|w| w[0] < w[1]));
        assert!(text.contains("[ERR]_12 "));
        assert!(text.contains(rx::QUESTION));
        assert!(text.contains("# Table: enrollment"));
        assert!(text.contains("empty result set"));
        assert!(text.ends_with("### Rule results\n[ERR]_7 value_error\n"));
        let again = build_detection_input(&sample, &cx.qss, cx.ast.as_ref(), &cx.feedback, &rules).render();
        assert_eq!(text, again);

        let gold = Sample { sql: rx::GOLD_SQL.into(), ..sample.clone() };
        let cx = prepare(&gold, &db.schema, Some(&conn), DEFAULT_TIMEOUT_MS);
        let text = build_detection_input(&gold, &cx.qss, cx.ast.as_ref(), &cx.feedback, &ErrorLabelSet::NoError).render();
        assert!(text.ends_with("### Rule results\nnone\n"));

        let broken = Sample { sql: "SELEC name FROM student".into(), ..sample };
        let cx = prepare(&broken, &db.schema, Some(&conn), DEFAULT_TIMEOUT_MS);
        let msg = cx.feedback.error_message().unwrap().to_string();
        assert!(msg.contains("syntax error"), "{msg}");
        let text = build_detection_input(&broken, &cx.qss, cx.ast.as_ref(), &cx.feedback, &ErrorLabelSet::NoError).render();
        assert!(text.contains(&msg));
        assert!(text.contains("unparseable: parse error at token 0"));
    }

    #[test]
    fn detect_aggregates_rule_and_model() {
        let dir = tempfile::tempdir().unwrap();
        materialize(dir.path()).unwrap();
        let db = DatabaseCache::new(dir.path()).get(rx::DB_ID).unwrap();
        let conn = db.connect().unwrap();
        let sample = example_sample();
        let cx = prepare(&sample, &db.schema, Some(&conn), DEFAULT_TIMEOUT_MS);

        let r = detect(&sample, &cx, &db.schema, Some(&conn), &FixedResponder::new("[ERR]_∅")).unwrap();
        assert_eq!(r.final_set, ErrorLabelSet::single(ErrorType::ValueError));
        assert!(r.flagged());

        let r = detect(&sample, &cx, &db.schema, Some(&conn), &FixedResponder::new("[ERR]_3")).unwrap();
        assert_eq!(r.final_set, ErrorLabelSet::from_labels([ErrorType::ValueError, ErrorType::AttributeMissing]));

        let gold = Sample { sql: rx::GOLD_SQL.into(), ..sample };
        let cx = prepare(&gold, &db.schema, Some(&conn), DEFAULT_TIMEOUT_MS);
        let r = detect(&gold, &cx, &db.schema, Some(&conn), &FixedResponder::new("[ERR]_∅")).unwrap();
        assert!(r.final_set.is_no_error() && !r.flagged());
        let line = serde_json::to_string(&DetectionReport::new("x", &r)).unwrap();
        assert_eq!(
            line,
            r#"{"question_id":"x","rule_errors":["no_error"],"llm_errors":["no_error"],"final":["no_error"],"flagged":false,"raw_tokens":["[ERR]_∅"]}"#
        );
    }
}
