//! Acceptance criteria. Prints one PASS/FAIL line per criterion and exits
//! non-zero when any fails.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;
use std::time::{Duration, Instant};

use proptest::collection::btree_set;
use proptest::prelude::*;
use proptest::test_runner::{Config as PropConfig, TestRunner};
use sqlrefine::ast::{flatten_ast, parse_sql, Dialect, SqlAst};
use sqlrefine::backend::make_oracle;
use sqlrefine::corpus::{read_jsonl, write_jsonl, Sample};
use sqlrefine::db::DatabaseCache;
use sqlrefine::detect::{aggregate, static_detect};
use sqlrefine::exec::{
    database_path, delta_ex, exec_equivalent, execute, execute_on, f1, gold_is_ordered, implied_fp_cr,
};
use sqlrefine::fixtures::{corpus, materialize, querygen::random_query, roundtrip_corpus, running_example as rx};
use sqlrefine::perturb::perturb;
use sqlrefine::pipeline::{run_pipeline, Backends, PipelineOptions, PipelineStatus};
use sqlrefine::refine::ExampleStore;
use sqlrefine::synth::{SampleSource, SynthSample};
use sqlrefine::taxonomy::{
    external_mapping, label_for, taxonomy, ErrorLabelSet, ErrorType, MappingData, TaxonomyData, NULL_TOKEN,
};
use sqlrefine_cli::config::BackendSpec;
use sqlrefine_cli::{cmd_run, cmd_synth, cmd_taxonomy_export, RunConfig, DATASET_FILE};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome, Duration);

const TIMEOUT_MS: u64 = 5_000;

fn check(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn fixture_dbs() -> (tempfile::TempDir, DatabaseCache) {
    let dir = tempfile::tempdir().expect("tempdir");
    materialize(dir.path()).expect("fixture databases");
    let dbs = DatabaseCache::new(dir.path());
    (dir, dbs)
}

fn c1_metric_arithmetic() -> Outcome {
    // Confusion counts whose precision and recall round to 0.8012 and 0.7622.
    let (tp, fp, fn_) = (266.0, 66.0, 83.0);
    let p: f64 = tp / (tp + fp);
    let r: f64 = tp / (tp + fn_);
    check((p - 0.8012).abs() < 5e-5 && (r - 0.7622).abs() < 5e-5, || format!("P={p} R={r}"))?;
    let score = f1(0.8012, 0.7622);
    check((score - 0.7812).abs() <= 1e-4, || format!("F1={score}"))?;
    let from_counts = f1(p, r);
    check((from_counts - 0.7812).abs() <= 1e-4, || format!("F1 from counts={from_counts}"))?;

    let product = implied_fp_cr(205, 0.7902, 0.0234, 1534);
    check((product - 126.1).abs() <= 0.5, || format!("fp*cr={product}"))?;
    // Any fp, cr with that product reproduces the gain.
    for fp in [150usize, 300, 516] {
        let d = delta_ex(205, fp, 0.7902, product / fp as f64, 1534);
        check((d - 0.0234).abs() < 1e-12, || format!("delta_ex with fp={fp} is {d}"))?;
    }
    Ok(format!("F1={score:.4}, fp*cr={product:.3}"))
}

fn c2_rule_inversion() -> Outcome {
    let (_dir, dbs) = fixture_dbs();
    let rows = corpus();
    let mut applicable: BTreeMap<ErrorType, usize> = BTreeMap::new();
    let mut recovered: BTreeMap<ErrorType, usize> = BTreeMap::new();
    let mut misses = Vec::new();
    let mut db_ids = BTreeSet::new();
    for row in &rows {
        db_ids.insert(row.db_id.clone());
        let db = dbs.get(&row.db_id).map_err(|e| e.to_string())?;
        let conn = db.connect().map_err(|e| e.to_string())?;
        let ast = parse_sql(&row.gold_sql, Dialect::Sqlite).map_err(|e| format!("{}: {e}", row.gold_sql))?;
        let gold_fb = execute_on(&conn, &row.gold_sql, TIMEOUT_MS);
        let on_gold = static_detect(Some(&ast), &db.schema, Some(&conn), &gold_fb);
        check(on_gold.is_no_error(), || format!("gold {} labelled {:?}", row.question_id, on_gold.tokens()))?;
        for label in ErrorType::ALL.into_iter().filter(|l| l.has_static_rule()) {
            for seed in 0..3u64 {
                let out = perturb(&ast, &db.schema, &conn, label, seed).map_err(|e| e.to_string())?;
                if !out.is_applied() {
                    continue;
                }
                *applicable.entry(label).or_default() += 1;
                // Re-parse the emitted text rather than trusting the perturbed tree.
                let sql = out.perturbed_sql.expect("applied outcome has SQL");
                let reparsed = parse_sql(&sql, Dialect::Sqlite).ok();
                let fb = execute_on(&conn, &sql, TIMEOUT_MS);
                let found = static_detect(reparsed.as_ref(), &db.schema, Some(&conn), &fb);
                if found.contains(label) {
                    *recovered.entry(label).or_default() += 1;
                } else {
                    misses.push(format!("{label}: {sql}"));
                }
            }
        }
    }
    check(rows.len() >= 50 && db_ids.len() >= 3, || format!("{} golds over {} databases", rows.len(), db_ids.len()))?;
    for label in ErrorType::ALL.into_iter().filter(|l| l.has_static_rule()) {
        check(applicable.get(&label).copied().unwrap_or(0) > 0, || format!("{label} never applicable"))?;
    }
    check(misses.is_empty(), || format!("{} misses, first: {}", misses.len(), misses[0]))?;
    let total: usize = applicable.values().sum();
    Ok(format!(
        "{} golds, {} databases, {total}/{total} recovered {:?}",
        rows.len(),
        db_ids.len(),
        recovered
    ))
}

fn c3_synthesis() -> Outcome {
    let work = tempfile::tempdir().map_err(|e| e.to_string())?;
    let root = work.path();
    materialize(&root.join("dbs")).map_err(|e| e.to_string())?;
    write_jsonl(&root.join("corpus.jsonl"), &corpus()).map_err(|e| e.to_string())?;
    let mut cfg = RunConfig::new("corpus.jsonl", "dbs", "out");
    cfg.base_dir = root.to_path_buf();
    cfg.seed = 11;
    cfg.backends.assistant = Some(BackendSpec::Oracle { fixtures: None });
    let report = cmd_synth(&cfg).map_err(|e| e.to_string())?;
    let samples: Vec<SynthSample> = read_jsonl(&root.join("out").join(DATASET_FILE)).map_err(|e| e.to_string())?;
    check(samples.len() == report.total, || format!("{} samples, report says {}", samples.len(), report.total))?;

    // Fresh read-only connections, independent of the synthesis run.
    let db_root = root.join("dbs");
    let mut erroneous = 0;
    let mut correct = 0;
    for s in &samples {
        let path = database_path(&db_root, &s.db_id);
        let ordered = gold_is_ordered(&s.gold_sql);
        let gold = execute(&s.gold_sql, &path, TIMEOUT_MS);
        check(gold.is_rows(), || format!("{}: gold fails", s.sample_id))?;
        let got = execute(&s.sql, &path, TIMEOUT_MS);
        let same = exec_equivalent(&got, &gold, ordered);
        if s.labels.is_no_error() {
            correct += 1;
            check(same, || format!("{}: no-error sample differs from gold", s.sample_id))?;
        } else {
            erroneous += 1;
            check(!same, || format!("{}: erroneous sample matches gold: {}", s.sample_id, s.sql))?;
        }
    }
    let share = correct as f64 / samples.len() as f64;
    check((share - 0.49).abs() <= 0.02, || format!("correct share {share:.4}"))?;
    Ok(format!(
        "{} samples, {erroneous} erroneous re-verified, correct:incorrect = {:.1}:{:.1}",
        samples.len(),
        share * 100.0,
        (1.0 - share) * 100.0
    ))
}

fn rule_single_dataset(dbs: &DatabaseCache) -> Result<Vec<SynthSample>, String> {
    let rows = corpus();
    let mut erroneous = Vec::new();
    for (i, row) in rows.iter().enumerate() {
        if erroneous.len() == 50 {
            break;
        }
        let db = dbs.get(&row.db_id).map_err(|e| e.to_string())?;
        let conn = db.connect().map_err(|e| e.to_string())?;
        let ast = parse_sql(&row.gold_sql, Dialect::Sqlite).map_err(|e| e.to_string())?;
        // Rotate through the types so the set is mixed.
        for k in 0..ErrorType::ALL.len() {
            let label = ErrorType::ALL[(i + k) % ErrorType::ALL.len()];
            let out = perturb(&ast, &db.schema, &conn, label, i as u64).map_err(|e| e.to_string())?;
            if !out.is_applied() {
                continue;
            }
            erroneous.push(SynthSample {
                sample_id: format!("{}/rule_single", row.question_id),
                question_id: row.question_id.clone(),
                db_id: row.db_id.clone(),
                question: row.question.clone(),
                sql: out.perturbed_sql.expect("applied outcome has SQL"),
                gold_sql: row.gold_sql.clone(),
                tokens: out.injected_labels.tokens(),
                labels: out.injected_labels,
                source: SampleSource::RuleSingle,
                localizations: out.localizations,
            });
            break;
        }
    }
    let correct = rows.iter().take(50).map(|row| SynthSample {
        sample_id: format!("{}/gold_correct", row.question_id),
        question_id: row.question_id.clone(),
        db_id: row.db_id.clone(),
        question: row.question.clone(),
        sql: row.gold_sql.clone(),
        gold_sql: row.gold_sql.clone(),
        tokens: ErrorLabelSet::NoError.tokens(),
        labels: ErrorLabelSet::NoError,
        source: SampleSource::GoldCorrect,
        localizations: Vec::new(),
    });
    let n_err = erroneous.len();
    let mut all = erroneous;
    all.extend(correct);
    check(n_err == 50 && all.len() == 100, || format!("{n_err} erroneous, {} total", all.len()))?;
    Ok(all)
}

fn c4_oracle_end_to_end() -> Outcome {
    let work = tempfile::tempdir().map_err(|e| e.to_string())?;
    let root = work.path();
    materialize(&root.join("dbs")).map_err(|e| e.to_string())?;
    let dbs = DatabaseCache::new(root.join("dbs"));
    let data = rule_single_dataset(&dbs)?;
    write_jsonl(&root.join("dataset.jsonl"), &data).map_err(|e| e.to_string())?;
    let mut cfg = RunConfig::new("dataset.jsonl", "dbs", "out");
    cfg.base_dir = root.to_path_buf();
    let oracle = Some(BackendSpec::Oracle { fixtures: None });
    cfg.backends.detector = oracle.clone();
    cfg.backends.localizer = oracle.clone();
    cfg.backends.refiner = oracle;
    let out = cmd_run(&cfg).map_err(|e| e.to_string())?;
    let e = &out.eval;
    check(e.fixed_rate == 1.0, || format!("FR={}", e.fixed_rate))?;
    check(e.corruption_rate == 0.0, || format!("CR={}", e.corruption_rate))?;
    check(e.delta_ex_observed == e.delta_ex_reconstructed, || {
        format!("observed {} != reconstructed {}", e.delta_ex_observed, e.delta_ex_reconstructed)
    })?;
    let mut unflagged = 0;
    for r in &out.records {
        if !r.flagged() {
            unflagged += 1;
            check(r.refined_sql == r.original_sql, || format!("{} rewritten while unflagged", r.question_id))?;
        }
    }
    Ok(format!(
        "FR={} CR={} dEX observed={:.4} reconstructed={:.4}, {unflagged} unflagged untouched",
        e.fixed_rate, e.corruption_rate, e.delta_ex_observed, e.delta_ex_reconstructed
    ))
}

fn alignment_holds(ast: &SqlAst) -> Result<(), String> {
    let n = ast.source_tokens().len();
    let root = ast.node(ast.root());
    check(root.span.start == 0 && root.span.end + 1 == n, || format!("root span {:?} vs {n} tokens", root.span))?;
    for (i, node) in ast.nodes().iter().enumerate() {
        check(node.id.0 as usize == i, || format!("node {i} has id {}", node.id))?;
        check(node.span.start <= node.span.end && node.span.end < n, || format!("{} out of range", node.id))?;
        for c in &node.children {
            let child = ast.node(*c);
            check(child.parent == Some(node.id) && node.span.contains(&child.span), || {
                format!("{} does not nest in {}", child.id, node.id)
            })?;
        }
        for w in node.children.windows(2) {
            check(ast.node(w[0]).span.end < ast.node(w[1]).span.start, || format!("children of {} overlap", node.id))?;
        }
    }
    let reachable: BTreeSet<_> = std::iter::once(ast.root()).chain(ast.descendants(ast.root())).collect();
    check(reachable.len() == ast.nodes().len(), || "unreachable nodes".into())
}

fn round_trip(sql: &str) -> Result<SqlAst, String> {
    let a = parse_sql(sql, Dialect::Sqlite).map_err(|e| format!("{sql}: {e}"))?;
    let flat = flatten_ast(&a);
    let b = parse_sql(&flat, Dialect::Sqlite).map_err(|e| format!("{flat}: {e}"))?;
    check(a.structurally_equal(&b), || format!("{sql} -> {flat}"))?;
    Ok(a)
}

fn c5_parser_round_trip() -> Outcome {
    let queries = roundtrip_corpus();
    check(queries.len() >= 200, || format!("corpus has {} queries", queries.len()))?;
    for (_, sql) in &queries {
        round_trip(sql)?;
    }
    for seed in 0..1000u64 {
        let sql = random_query(seed);
        let ast = round_trip(&sql)?;
        alignment_holds(&ast).map_err(|e| format!("seed {seed}: {e}"))?;
    }
    Ok(format!("{} corpus queries, 1000 generated", queries.len()))
}

fn c6_aggregation_algebra() -> Outcome {
    let set = || {
        btree_set(0..ErrorType::ALL.len(), 0..6)
            .prop_map(|ix| ErrorLabelSet::from_labels(ix.into_iter().map(|i| ErrorType::ALL[i])))
    };
    let mut runner = TestRunner::new(PropConfig {
        cases: 1000,
        failure_persistence: None,
        ..PropConfig::default()
    });
    runner
        .run(&(set(), set()), |(rule, llm)| {
            let fin = aggregate(&rule, &llm);
            let want: BTreeSet<ErrorType> = rule.labels().into_iter().chain(llm.labels()).collect();
            prop_assert_eq!(fin.labels().into_iter().collect::<BTreeSet<_>>(), want);
            let toks = fin.tokens();
            prop_assert!(!toks.iter().any(|t| t == NULL_TOKEN) || toks.len() == 1);
            prop_assert_eq!(fin.is_no_error(), rule.is_no_error() && llm.is_no_error());
            Ok(())
        })
        .map_err(|e| e.to_string())?;
    Ok("1000 cases".into())
}

fn c7_running_example() -> Outcome {
    let (_dir, dbs) = fixture_dbs();
    let db = dbs.get(rx::DB_ID).map_err(|e| e.to_string())?;
    let conn = db.connect().map_err(|e| e.to_string())?;
    let gold = parse_sql(rx::GOLD_SQL, Dialect::Sqlite).map_err(|e| e.to_string())?;
    let out = perturb(&gold, &db.schema, &conn, ErrorType::ValueError, 0).map_err(|e| e.to_string())?;
    let bad = out.perturbed_sql.clone().ok_or("value perturbation inapplicable")?;
    check(bad.contains("'Complete'") && !bad.contains("'Completed'"), || format!("perturbed to {bad}"))?;

    let fb = execute_on(&conn, &bad, TIMEOUT_MS);
    let found = static_detect(out.perturbed_ast.as_ref(), &db.schema, Some(&conn), &fb);
    check(found.tokens() == vec!["[ERR]_7".to_string()], || format!("detected {:?}", found.tokens()))?;

    let sample = SynthSample {
        sample_id: rx::QUESTION_ID.into(),
        question_id: rx::QUESTION_ID.into(),
        db_id: rx::DB_ID.into(),
        question: rx::QUESTION.into(),
        sql: bad.clone(),
        gold_sql: rx::GOLD_SQL.into(),
        tokens: out.injected_labels.tokens(),
        labels: out.injected_labels.clone(),
        source: SampleSource::RuleSingle,
        localizations: out.localizations.clone(),
    };
    let oracle = make_oracle(&[sample.oracle_fixture()]).map_err(|e| e.to_string())?;
    let backends = Backends {
        detector: oracle.detector.as_ref(),
        localizer: oracle.localizer.as_ref(),
        refiner: oracle.refiner.as_ref(),
    };
    let s: Sample = sample.to_sample();
    let rec = run_pipeline(&s, &db, Some(&conn), backends, &PipelineOptions::default(), &ExampleStore::builtin());
    check(rec.status == PipelineStatus::Refined, || format!("status {:?}", rec.status))?;
    check(rec.refined_sql.contains("'Completed'"), || format!("refined to {}", rec.refined_sql))?;
    let refined = execute_on(&conn, &rec.refined_sql, TIMEOUT_MS);
    let want = execute_on(&conn, rx::GOLD_SQL, TIMEOUT_MS);
    check(exec_equivalent(&refined, &want, false), || "refined result differs from gold".into())?;
    Ok(format!("'Complete' -> {} -> 'Completed'", found.tokens()[0]))
}

fn tsv(path: &Path) -> Result<Vec<Vec<String>>, String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    Ok(text.lines().skip(1).map(|l| l.split('\t').map(str::to_string).collect()).collect())
}

fn c8_taxonomy_fidelity() -> Outcome {
    let work = tempfile::tempdir().map_err(|e| e.to_string())?;
    let files = cmd_taxonomy_export(work.path()).map_err(|e| e.to_string())?;
    let read = |name: &str| -> Result<String, String> {
        let p = files.iter().find(|p| p.ends_with(name)).ok_or(format!("{name} not exported"))?;
        std::fs::read_to_string(p).map_err(|e| e.to_string())
    };
    let tax: TaxonomyData = serde_json::from_str(&read("taxonomy.json")?).map_err(|e| e.to_string())?;
    let map: MappingData = serde_json::from_str(&read("external_mapping.json")?).map_err(|e| e.to_string())?;
    check(&tax == taxonomy() && &map == external_mapping(), || "export differs from the embedded data".into())?;

    let golden = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden");
    let rows = tsv(&golden.join("taxonomy.tsv"))?;
    check(tax.types.len() == 12 && rows.len() == 14, || format!("{} types, {} golden rows", tax.types.len(), rows.len()))?;
    for (i, (t, row)) in tax.types.iter().zip(&rows).enumerate() {
        let id = i + 1;
        check(t.id as usize == id && t.name.id() as usize == id, || format!("type {i} has id {}", t.id))?;
        let got = [format!("[ERR]_{id}"), t.display_name.clone(), t.description.clone(), t.example.clone()];
        check(got.as_slice() == row.as_slice(), || format!("type {id}: {got:?} != {row:?}"))?;
        check(label_for(&got[0]) == Ok(Some(t.name)), || format!("{} does not decode", got[0]))?;
    }
    check(tax.reserved_slots == 32 && tax.reserved.first == 13, || {
        format!("reserved {}..{}", tax.reserved.first, tax.reserved_slots)
    })?;
    let reserved = [
        format!("[ERR]_{}-[ERR]_{}", tax.reserved.first, tax.reserved_slots),
        tax.reserved.display_name.clone(),
        tax.reserved.description.clone(),
        tax.reserved.example.clone(),
    ];
    check(reserved.as_slice() == rows[12].as_slice(), || format!("{reserved:?} != {:?}", rows[12]))?;
    for k in 13..=32 {
        check(label_for(&format!("[ERR]_{k}")).is_err(), || format!("[ERR]_{k} decodes as a live type"))?;
    }
    let ne = &tax.no_error;
    let none = [ne.token.clone(), ne.display_name.clone(), ne.description.clone(), ne.example.clone()];
    check(none.as_slice() == rows[13].as_slice(), || format!("{none:?} != {:?}", rows[13]))?;
    check(ne.token == NULL_TOKEN && label_for(NULL_TOKEN) == Ok(None), || "no-error token".into())?;

    let mrows = tsv(&golden.join("mapping.tsv"))?;
    check(map.rows.len() == mrows.len(), || format!("{} mapping rows, golden {}", map.rows.len(), mrows.len()))?;
    for (m, g) in map.rows.iter().zip(&mrows) {
        let got = [
            m.category.clone(),
            m.subcategory.clone(),
            m.token.clone().unwrap_or_else(|| "-".into()),
            m.error_type.map_or("-".to_string(), |t| t.display_name().to_string()),
        ];
        check(got.as_slice() == g.as_slice(), || format!("{got:?} != {g:?}"))?;
        if let (Some(tok), Some(t)) = (&m.token, m.error_type) {
            check(tok == &t.token(), || format!("{tok} does not match {t}"))?;
        }
    }
    Ok(format!("12 types, reserved 13..32, {} mapping rows", map.rows.len()))
}

fn main() {
    let criteria: [Criterion; 8] = [
        ("1 metric arithmetic", c1_metric_arithmetic, Duration::from_secs(1)),
        ("2 rule inversion", c2_rule_inversion, Duration::from_secs(60)),
        ("3 synthesis verification", c3_synthesis, Duration::from_secs(120)),
        ("4 oracle end-to-end", c4_oracle_end_to_end, Duration::from_secs(120)),
        ("5 parser round-trip", c5_parser_round_trip, Duration::from_secs(30)),
        ("6 aggregation algebra", c6_aggregation_algebra, Duration::from_secs(10)),
        ("7 running example", c7_running_example, Duration::from_secs(5)),
        ("8 taxonomy fidelity", c8_taxonomy_fidelity, Duration::from_secs(5)),
    ];
    let mut failed = 0;
    for (name, f, budget) in criteria {
        let start = Instant::now();
        let result = f();
        let took = start.elapsed();
        let verdict = match (&result, took <= budget) {
            (Ok(detail), true) => format!("PASS {name} ({took:.2?}): {detail}"),
            (Ok(detail), false) => format!("FAIL {name} ({took:.2?} over {budget:?}): {detail}"),
            (Err(why), _) => format!("FAIL {name} ({took:.2?}): {why}"),
        };
        if !verdict.starts_with("PASS") {
            failed += 1;
        }
        println!("{verdict}");
    }
    println!("{} of 8 criteria passed", 8 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
