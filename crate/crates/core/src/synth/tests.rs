use super::*;
use crate::backend::{make_oracle, FnBackend, OracleFixture};
use crate::corpus::to_jsonl;
use crate::detect::static_detect;
use crate::fixtures::{corpus, materialize, running_example as rx};

fn setup() -> (tempfile::TempDir, DatabaseCache) {
    let dir = tempfile::tempdir().unwrap();
    materialize(dir.path()).unwrap();
    let dbs = DatabaseCache::new(dir.path());
    (dir, dbs)
}

fn task_on<'a>(qss: &'a QuestionSchemaStructure) -> InjectionTask<'a> {
    InjectionTask {
        sample_id: rx::QUESTION_ID,
        question: rx::QUESTION,
        qss,
        predicted_sql: rx::ERRONEOUS_SQL,
        gold_sql: rx::GOLD_SQL,
    }
}

#[test]
fn injection_accepts_only_verified_fixes() {
    let (_d, dbs) = setup();
    let db = dbs.get(rx::DB_ID).unwrap();
    let conn = db.connect().unwrap();
    let qss = build_qss(rx::QUESTION, &db.schema, None, &[]).unwrap();
    let task = task_on(&qss);
    let reply = |text: String| FnBackend::new("a", move |_| Ok(text.clone()));

    let ok = reply(format!(r#"{{"labels": ["value_error"], "sql": "{}"}}"#, rx::GOLD_SQL.replace('"', "\\\"")));
    assert_eq!(
        llm_inject(&task, &conn, &ok, 5000).unwrap(),
        InjectOutcome::Accepted {
            labels: ErrorLabelSet::single(ErrorType::ValueError),
            refined_sql: rx::GOLD_SQL.to_string()
        }
    );
    let wrong = reply(r#"Sure: {"labels": ["value_error"], "sql": "SELECT name FROM student"}"#.into());
    assert_eq!(
        llm_inject(&task, &conn, &wrong, 5000).unwrap(),
        InjectOutcome::Rejected {
            reason: RejectReason::NotEquivalent
        }
    );
    let prose = reply("The literal should be Completed.".into());
    assert_eq!(
        llm_inject(&task, &conn, &prose, 5000).unwrap(),
        InjectOutcome::Rejected {
            reason: RejectReason::UnparseableLabels
        }
    );
    let unknown = reply(r#"{"labels": ["typo"], "sql": "SELECT 1"}"#.into());
    assert!(matches!(
        llm_inject(&task, &conn, &unknown, 5000).unwrap(),
        InjectOutcome::Rejected { reason: RejectReason::UnparseableLabels }
    ));
    let down = FnBackend::new("down", |_| Err(BackendError::Timeout));
    assert!(matches!(llm_inject(&task, &conn, &down, 5000), Err(BackendError::Timeout)));

    let oracle = make_oracle(&[OracleFixture {
        sample_id: rx::QUESTION_ID.into(),
        gold_sql: Some(rx::GOLD_SQL.into()),
        labels: ErrorLabelSet::single(ErrorType::ValueError),
        localizations: vec![],
    }])
    .unwrap();
    assert!(matches!(
        llm_inject(&task, &conn, oracle.assistant.as_ref(), 5000).unwrap(),
        InjectOutcome::Accepted { .. }
    ));
}

fn oracle_for_corpus() -> crate::backend::OracleBackends {
    let fixtures: Vec<OracleFixture> = corpus()
        .iter()
        .map(|r| OracleFixture {
            sample_id: r.question_id.clone(),
            gold_sql: Some(r.gold_sql.clone()),
            labels: ErrorLabelSet::single(ErrorType::ConditionError),
            localizations: vec![],
        })
        .collect();
    make_oracle(&fixtures).unwrap()
}

#[test]
fn dataset_composition_and_verification() {
    let (_d, dbs) = setup();
    let rows = corpus();
    let oracle = oracle_for_corpus();
    let config = SynthConfig {
        seed: 11,
        ..SynthConfig::default()
    };
    let out = synthesize_dataset(&rows, &dbs, &config, Some(oracle.assistant.as_ref())).unwrap();
    let r = &out.report;
    println!("{}", serde_json::to_string_pretty(r).unwrap());
    assert!(r.within_tolerance, "{}", r.correct_ratio);
    assert!(r.injection.accepted > 0);
    assert_eq!(r.single_labels.len(), 12);
    assert!(r.partitions.iter().all(|p| p.count > 0));

    let by_id: BTreeMap<&str, &CorpusRow> = rows.iter().map(|r| (r.question_id.as_str(), r)).collect();
    let ids: BTreeSet<&str> = out.samples.iter().map(|s| s.sample_id.as_str()).collect();
    assert_eq!(ids.len(), out.samples.len());
    for s in &out.samples {
        assert_eq!(s.tokens, s.labels.tokens());
        let row = by_id[s.question_id.as_str()];
        let db = dbs.get(&s.db_id).unwrap();
        let conn = db.connect().unwrap();
        let got = execute_on(&conn, &s.sql, 5000);
        let want = execute_on(&conn, &row.gold_sql, 5000);
        let same = exec_equivalent(&got, &want, gold_is_ordered(&row.gold_sql));
        match s.source {
            SampleSource::GoldCorrect | SampleSource::PredCorrect => {
                assert!(s.labels.is_no_error());
                assert!(same, "{}", s.sql);
            }
            _ => {
                assert!(!s.labels.is_no_error());
                assert!(!same, "{}: {}", s.sample_id, s.sql);
            }
        }
        if s.source == SampleSource::RuleSingle {
            let label = s.labels.labels()[0];
            if label.has_static_rule() {
                let ast = parse_sql(&s.sql, Dialect::Sqlite).ok();
                let found = static_detect(ast.as_ref(), &db.schema, Some(&conn), &got);
                assert!(found.contains(label), "{}: {found:?}", s.sql);
            }
        }
        if s.source == SampleSource::RuleCompound {
            assert_eq!(s.labels.len(), 2);
        }
    }

    let again = synthesize_dataset(&rows, &dbs, &config, Some(oracle.assistant.as_ref())).unwrap();
    assert_eq!(to_jsonl(&out.samples), to_jsonl(&again.samples));
    let other = synthesize_dataset(&rows, &dbs, &SynthConfig { seed: 12, ..config }, Some(oracle.assistant.as_ref())).unwrap();
    assert_ne!(to_jsonl(&out.samples), to_jsonl(&other.samples));
}

#[test]
fn no_backend_flags_empty_injection_partition() {
    let (_d, dbs) = setup();
    let rows: Vec<CorpusRow> = corpus().into_iter().filter(|r| r.pred_correct != Some(false)).collect();
    let out = synthesize_dataset(&rows, &dbs, &SynthConfig::default(), None).unwrap();
    let r = &out.report;
    assert_eq!(r.injection.accepted, 0);
    assert!(r.shortfalls.iter().any(|s| s.contains("injection partition empty")));
    assert!(out.samples.iter().all(|s| s.source != SampleSource::LlmInjected));
    assert!(r.within_tolerance, "{}", r.correct_ratio);
}

#[test]
fn unmet_minimum_is_an_error() {
    let (_d, dbs) = setup();
    let rows = corpus();
    let mut config = SynthConfig::default();
    config.per_label_minimums.insert(ErrorType::ValueError, 500);
    match synthesize_dataset(&rows, &dbs, &config, None) {
        Err(SynthError::InsufficientCorpus { label, needed, .. }) => {
            assert_eq!(label, ErrorType::ValueError);
            assert_eq!(needed, 500);
        }
        other => panic!("{:?}", other.map(|o| o.report)),
    }
}

#[test]
fn config_round_trips() {
    let c = SynthConfig::default();
    let text = serde_json::to_string(&c).unwrap();
    assert!(text.contains(r#""value_error":1"#));
    assert_eq!(serde_json::from_str::<SynthConfig>(&text).unwrap(), c);
}
