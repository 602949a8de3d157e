use std::collections::BTreeSet;

use super::*;
use crate::ast::{parse_sql, Dialect, NodeKind, SqlAst};
use crate::backend::{make_oracle, FixedResponder, OracleBackends, OracleFixture};
use crate::corpus::Sample;
use crate::db::{Database, DatabaseCache};
use crate::detect::{build_detection_input, prepare, static_detect, DetectionInput};
use crate::exec::{exec_equivalent, execute_on, DEFAULT_TIMEOUT_MS};
use crate::fixtures::{materialize, running_example as rx};
use crate::perturb::perturb;
use crate::pipeline::{run_pipeline, Backends, PipelineOptions, PipelineStatus};
use crate::schema::{build_qss, ColumnId, SchemaNode};
use crate::taxonomy::{ErrorLabelSet, ErrorType, LocalizationBlock};

struct World {
    _dir: tempfile::TempDir,
    db: std::sync::Arc<Database>,
}

fn world() -> World {
    let dir = tempfile::tempdir().unwrap();
    materialize(dir.path()).unwrap();
    let db = DatabaseCache::new(dir.path()).get(rx::DB_ID).unwrap();
    World { _dir: dir, db }
}

fn sample(sql: &str) -> Sample {
    Sample {
        question_id: rx::QUESTION_ID.into(),
        db_id: rx::DB_ID.into(),
        question: rx::QUESTION.into(),
        sql: sql.into(),
        gold_sql: Some(rx::GOLD_SQL.into()),
    }
}

/// Oracle whose localization comes from perturbing the gold query.
fn oracle(w: &World) -> (OracleBackends, LocalizationBlock) {
    let conn = w.db.connect().unwrap();
    let gold = parse_sql(rx::GOLD_SQL, Dialect::Sqlite).unwrap();
    let out = perturb(&gold, &w.db.schema, &conn, ErrorType::ValueError, 0).unwrap();
    assert_eq!(out.perturbed_sql.as_deref(), Some(rx::ERRONEOUS_SQL));
    let block = out.localizations[0].clone();
    let o = make_oracle(&[OracleFixture {
        sample_id: rx::QUESTION_ID.into(),
        gold_sql: Some(rx::GOLD_SQL.into()),
        labels: ErrorLabelSet::single(ErrorType::ValueError),
        localizations: vec![block.clone()],
    }])
    .unwrap();
    (o, block)
}

fn detection_input(w: &World, s: &Sample) -> (DetectionInput, Option<SqlAst>) {
    let conn = w.db.connect().unwrap();
    let cx = prepare(s, &w.db.schema, Some(&conn), DEFAULT_TIMEOUT_MS);
    let rules = static_detect(cx.ast(), &w.db.schema, Some(&conn), &cx.feedback);
    (
        build_detection_input(s, &cx.qss, cx.ast.as_ref(), &cx.feedback, &rules),
        cx.ast.ok(),
    )
}

#[test]
fn localizes_the_running_example() {
    let w = world();
    let (o, _) = oracle(&w);
    let s = sample(rx::ERRONEOUS_SQL);
    let (input, ast) = detection_input(&w, &s);
    let ast = ast.unwrap();
    let labels = ErrorLabelSet::single(ErrorType::ValueError);
    let locs = localize(&input, &labels, Some(&ast), &w.db.schema, o.localizer.as_ref(), Some(rx::QUESTION_ID), 2).unwrap();
    assert_eq!(locs.len(), 1);
    let loc = &locs[0];
    assert!(!loc.downgraded, "{:?}", loc.warnings);
    let lits: Vec<_> = loc.error_nodes.iter().map(|n| ast.node(*n)).collect();
    assert_eq!(lits.len(), 1);
    assert_eq!(lits[0].kind, NodeKind::Literal);
    assert_eq!(lits[0].attr("value"), Some("Complete"));
    assert_eq!(loc.schema_elements, vec![SchemaNode::column(&ColumnId::new("enrollment", "status"))]);
    assert!(loc.guideline.is_complete());
    assert_eq!(loc.guideline.values["current_value"], "'Complete'");
    assert_eq!(loc.guideline.values["correct_value_from_nl"], "'Completed'");

    let none = localize(&input, &ErrorLabelSet::NoError, Some(&ast), &w.db.schema, o.localizer.as_ref(), None, 2);
    assert!(matches!(none, Err(RefineError::NothingToLocalize)));
}

#[test]
fn unknown_references_downgrade() {
    let w = world();
    let ast = parse_sql(rx::ERRONEOUS_SQL, Dialect::Sqlite).unwrap();
    let mut b = LocalizationBlock::new(ErrorType::AttributeMismatch);
    b.nodes = vec!["e.grade".into()];
    b.schema = vec!["enrollment.grade".into(), "student.name".into()];
    let loc = resolve_block(&b, Some(&ast), &w.db.schema);
    assert!(loc.downgraded);
    assert!(loc.error_nodes.is_empty());
    assert_eq!(loc.schema_elements, vec![SchemaNode::column(&ColumnId::new("student", "name"))]);
    assert!(loc.warnings.iter().any(|m| m.contains("enrollment.grade")));
    assert!(loc.guideline.is_complete());
    assert!(loc.guideline.values.values().any(|v| v == UNSPECIFIED));
}

#[test]
fn fragments_resolve_exactly_then_by_unique_substring() {
    let ast = parse_sql(rx::ERRONEOUS_SQL, Dialect::Sqlite).unwrap();
    let id = resolve_fragment(&ast, "e.status = 'Complete'").unwrap();
    assert_eq!(ast.node(id).kind, NodeKind::Comparison);
    let id = resolve_fragment(&ast, "WHERE E.STATUS = 'Complete'").unwrap();
    assert_eq!(ast.node(id).kind, NodeKind::WhereClause);
    // "= 'Complete'" is no node's span; the comparison is the smallest cover.
    let id = resolve_fragment(&ast, "= 'Complete'").unwrap();
    assert_eq!(ast.node(id).kind, NodeKind::Comparison);
    // "s" occurs several times.
    assert_eq!(resolve_fragment(&ast, "s"), None);
    assert_eq!(resolve_fragment(&ast, "'Completed'"), None);
}

#[test]
fn context_for_the_value_error() {
    let w = world();
    let (_, block) = oracle(&w);
    let ast = parse_sql(rx::ERRONEOUS_SQL, Dialect::Sqlite).unwrap();
    let qss = build_qss(rx::QUESTION, &w.db.schema, None, &[]).unwrap();
    let loc = resolve_block(&block, Some(&ast), &w.db.schema);
    let store = ExampleStore::builtin();
    let e = extract_context(rx::ERRONEOUS_SQL, Some(&ast), &w.db.schema, &qss, &loc, &store, DEFAULT_FEW_SHOT);
    assert_eq!(ast.node(e.fragment.root.unwrap()).kind, NodeKind::WhereClause);
    assert_eq!(e.fragment_sql, "WHERE e.status = 'Complete'");
    let g = &e.subgraph.graph;
    assert!(g.has_table("enrollment"));
    assert!(g.column("enrollment", "status").is_some());
    for (a, b) in w.db.schema.foreign_keys() {
        if a.table == "enrollment" {
            assert!(g.column(&b.table, &b.column).is_some(), "{b}");
        }
    }
    assert_eq!(e.examples.len(), 2);
    assert!(e.examples.iter().all(|x| x.error_type == ErrorType::ValueError));

    let mut empty = loc.clone();
    empty.error_nodes = BTreeSet::new();
    let e = extract_context(rx::ERRONEOUS_SQL, Some(&ast), &w.db.schema, &qss, &empty, &ExampleStore::default(), 2);
    assert!(e.fragment.is_empty());
    assert_eq!(e.fragment_sql, rx::ERRONEOUS_SQL);
    assert!(e.examples.is_empty());
}

#[test]
fn builtin_examples_are_verified() {
    let dir = tempfile::tempdir().unwrap();
    materialize(dir.path()).unwrap();
    let dbs = DatabaseCache::new(dir.path());
    let store = ExampleStore::builtin();
    for t in ErrorType::ALL {
        assert!(store.top_k(t, 5).len() >= 2, "{t}");
    }
    for ex in &store.examples {
        let conn = dbs.get(&ex.db_id).unwrap().connect().unwrap();
        let bad = execute_on(&conn, &ex.erroneous_sql, 5000);
        let good = execute_on(&conn, &ex.corrected_sql, 5000);
        assert!(good.is_rows(), "{}", ex.corrected_sql);
        let ordered = crate::exec::gold_is_ordered(&ex.corrected_sql);
        assert!(!exec_equivalent(&bad, &good, ordered), "{}", ex.erroneous_sql);
    }
}

#[test]
fn refine_single_call_and_fallbacks() {
    let w = world();
    let (o, block) = oracle(&w);
    let ast = parse_sql(rx::ERRONEOUS_SQL, Dialect::Sqlite).unwrap();
    let qss = build_qss(rx::QUESTION, &w.db.schema, None, &[]).unwrap();
    let loc = resolve_block(&block, Some(&ast), &w.db.schema);
    let store = ExampleStore::builtin();
    let entry = extract_context(rx::ERRONEOUS_SQL, Some(&ast), &w.db.schema, &qss, &loc, &store, 2);
    let ctx = RefinementContext::new(rx::QUESTION, vec![entry]);
    let sql = refine(rx::ERRONEOUS_SQL, &ctx, o.refiner.as_ref(), Some(rx::QUESTION_ID), 2).unwrap();
    assert!(sql.ends_with("WHERE e.status = 'Completed'"));
    assert_eq!(o.refiner.calls(), 1);

    let prose = FixedResponder::new("I think the status value is wrong.");
    assert!(matches!(
        refine(rx::ERRONEOUS_SQL, &ctx, &prose, None, 2),
        Err(RefineError::RefinementFailed(_))
    ));
    assert_eq!(prose.calls(), 3);

    let fenced = FixedResponder::new("Here you go:\n```sql\nSELECT name FROM student\n```\nDone.");
    assert_eq!(refine(rx::ERRONEOUS_SQL, &ctx, &fenced, None, 0).unwrap(), "SELECT name FROM student");
}

#[test]
fn context_is_priority_ordered() {
    let w = world();
    let ast = parse_sql(rx::ERRONEOUS_SQL, Dialect::Sqlite).unwrap();
    let qss = build_qss(rx::QUESTION, &w.db.schema, None, &[]).unwrap();
    let store = ExampleStore::builtin();
    let entries: Vec<_> = [ErrorType::ModifierError, ErrorType::ValueError, ErrorType::TableMissing, ErrorType::AttributeMismatch]
        .into_iter()
        .map(|t| {
            let loc = resolve_block(&LocalizationBlock::new(t), Some(&ast), &w.db.schema);
            extract_context(rx::ERRONEOUS_SQL, Some(&ast), &w.db.schema, &qss, &loc, &store, 2)
        })
        .collect();
    let ctx = RefinementContext::new("q", entries);
    assert!(ctx.is_sorted());
    let order: Vec<ErrorType> = ctx.entries.iter().map(|e| e.error_type).collect();
    assert_eq!(
        order,
        vec![ErrorType::TableMissing, ErrorType::AttributeMismatch, ErrorType::ValueError, ErrorType::ModifierError]
    );
    let prompt = render_refinement_prompt(rx::ERRONEOUS_SQL, &ctx);
    let pos: Vec<usize> = order.iter().map(|t| prompt.find(&format!("{} ", t.token())).unwrap()).collect();
    assert!(pos.windows(2).all(|p| p[0] < p[1]));
}

#[test]
fn pipeline_paths() {
    let w = world();
    let (o, _) = oracle(&w);
    let conn = w.db.connect().unwrap();
    let store = ExampleStore::builtin();
    let opts = PipelineOptions::default();
    let backends = Backends {
        detector: o.detector.as_ref(),
        localizer: o.localizer.as_ref(),
        refiner: o.refiner.as_ref(),
    };
    let rec = run_pipeline(&sample(rx::ERRONEOUS_SQL), &w.db, Some(&conn), backends, &opts, &store);
    assert_eq!(rec.status, PipelineStatus::Refined);
    assert_eq!(rec.final_labels, ErrorLabelSet::single(ErrorType::ValueError));
    let gold = execute_on(&conn, rx::GOLD_SQL, 5000);
    assert!(exec_equivalent(&execute_on(&conn, &rec.refined_sql, 5000), &gold, false));
    assert_eq!(o.refiner.calls(), 1);

    let correct = Sample {
        question_id: "other".into(),
        ..sample(rx::GOLD_SQL)
    };
    let clean = make_oracle(&[OracleFixture {
        sample_id: "other".into(),
        gold_sql: Some(rx::GOLD_SQL.into()),
        labels: ErrorLabelSet::NoError,
        localizations: vec![],
    }])
    .unwrap();
    let b = Backends {
        detector: clean.detector.as_ref(),
        localizer: clean.localizer.as_ref(),
        refiner: clean.refiner.as_ref(),
    };
    let rec = run_pipeline(&correct, &w.db, Some(&conn), b, &opts, &store);
    assert_eq!(rec.status, PipelineStatus::Passthrough);
    assert_eq!(rec.refined_sql, rx::GOLD_SQL);
    assert_eq!(clean.refiner.calls(), 0);

    let broken = Sample {
        question_id: "broken".into(),
        ..sample("SELECT s.name FROM student s JOIN enrollment e ON s.id = e.student_id WHERE e.status = 'Completed' AND")
    };
    let fix = make_oracle(&[OracleFixture {
        sample_id: "broken".into(),
        gold_sql: Some(rx::GOLD_SQL.into()),
        labels: ErrorLabelSet::NoError,
        localizations: vec![],
    }])
    .unwrap();
    let b = Backends {
        detector: fix.detector.as_ref(),
        localizer: fix.localizer.as_ref(),
        refiner: fix.refiner.as_ref(),
    };
    let rec = run_pipeline(&broken, &w.db, Some(&conn), b, &opts, &store);
    assert_eq!(rec.final_labels, ErrorLabelSet::single(ErrorType::ClauseError));
    assert_eq!(rec.status, PipelineStatus::Refined);
    assert!(rec.localizations.iter().all(|l| l.downgraded && l.error_nodes.is_empty()));
    assert_eq!(rec.refined_sql, rx::GOLD_SQL);
}
