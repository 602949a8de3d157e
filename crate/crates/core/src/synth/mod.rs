//! Training-set synthesis: model-assisted injection, rule perturbation and
//! no-error sampling.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use rusqlite::Connection;
use serde::{Deserialize, Serialize};

use crate::ast::{parse_sql, Dialect, SqlAst};
use crate::backend::{Backend, BackendError, CompletionRequest, OracleFixture, Role};
use crate::corpus::{CorpusRow, Sample};
use crate::db::{Database, DatabaseCache};
use crate::exec::{exec_equivalent, execute_on, gold_is_ordered, ExecOutcome};
use crate::perturb::{compatible_pairs, PerturbError, PerturbationOutcome, Perturber, DEFAULT_VERIFY_TIMEOUT_MS};
use crate::schema::{build_qss, serialize_mschema, QuestionSchemaStructure, SchemaError};
use crate::taxonomy::{ErrorLabelSet, ErrorType, LocalizationBlock};

pub const DEFAULT_TARGET_RATIO: f64 = 0.49;
pub const DEFAULT_RATIO_TOLERANCE: f64 = 0.02;
/// Share of rule samples that carry two errors.
pub const DEFAULT_COMPOUND_FRACTION: f64 = 1226.0 / 2325.0;
/// Rule samples produced per accepted injection sample.
pub const DEFAULT_RULE_PER_LLM: f64 = 2325.0 / 2519.0;

pub const ASSISTANT_SYSTEM: &str = "You annotate and repair SQL queries. Compare the predicted query with the \
reference query, name the error types of the predicted query, and correct it. Reply with one JSON object: \
{\"labels\": [error type names], \"sql\": \"corrected query\"}.";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SampleSource {
    RuleSingle,
    RuleCompound,
    LlmInjected,
    GoldCorrect,
    PredCorrect,
}

impl SampleSource {
    pub fn name(self) -> &'static str {
        match self {
            SampleSource::RuleSingle => "rule_single",
            SampleSource::RuleCompound => "rule_compound",
            SampleSource::LlmInjected => "llm_injected",
            SampleSource::GoldCorrect => "gold_correct",
            SampleSource::PredCorrect => "pred_correct",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SynthSample {
    /// Unique within a dataset; several samples may share a question.
    pub sample_id: String,
    pub question_id: String,
    pub db_id: String,
    pub question: String,
    pub sql: String,
    pub gold_sql: String,
    pub labels: ErrorLabelSet,
    pub tokens: Vec<String>,
    pub source: SampleSource,
    /// Where each injected error sits, for rule samples.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub localizations: Vec<LocalizationBlock>,
}

impl SynthSample {
    fn new(row: &CorpusRow, n: usize, sql: String, labels: ErrorLabelSet, source: SampleSource) -> Self {
        SynthSample {
            sample_id: format!("{}/{}/{n}", row.question_id, source.name()),
            question_id: row.question_id.clone(),
            db_id: row.db_id.clone(),
            question: row.question.clone(),
            sql,
            gold_sql: row.gold_sql.clone(),
            tokens: labels.tokens(),
            labels,
            source,
            localizations: Vec::new(),
        }
    }

    /// The pipeline view, keyed by sample id.
    pub fn to_sample(&self) -> Sample {
        Sample {
            question_id: self.sample_id.clone(),
            db_id: self.db_id.clone(),
            question: self.question.clone(),
            sql: self.sql.clone(),
            gold_sql: Some(self.gold_sql.clone()),
        }
    }

    pub fn oracle_fixture(&self) -> OracleFixture {
        OracleFixture {
            sample_id: self.sample_id.clone(),
            gold_sql: Some(self.gold_sql.clone()),
            labels: self.labels.clone(),
            localizations: self.localizations.clone(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RejectReason {
    NotEquivalent,
    UnparseableLabels,
    BackendError,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum InjectOutcome {
    Accepted { labels: ErrorLabelSet, refined_sql: String },
    Rejected { reason: RejectReason },
}

/// One incorrect prediction handed to the assistant.
#[derive(Debug, Clone, Copy)]
pub struct InjectionTask<'a> {
    pub sample_id: &'a str,
    pub question: &'a str,
    pub qss: &'a QuestionSchemaStructure,
    pub predicted_sql: &'a str,
    pub gold_sql: &'a str,
}

fn assistant_prompt(task: &InjectionTask<'_>) -> String {
    let names: Vec<&str> = ErrorType::ALL.iter().map(|t| t.name()).collect();
    format!(
        "### Error types\n{}\n\n### Question\n{}\n\n### Schema\n{}\n\n### Predicted SQL\n{}\n\n### Reference SQL\n{}\n",
        names.join(", "),
        task.question,
        serialize_mschema(task.qss).trim_end(),
        task.predicted_sql,
        task.gold_sql
    )
}

#[derive(Deserialize)]
struct Annotation {
    labels: Vec<String>,
    #[serde(default)]
    sql: Option<String>,
}

/// Labels and corrected SQL from an assistant reply. The reply may wrap the
/// JSON object in prose or a code fence.
pub fn parse_annotation(raw: &str) -> Result<(ErrorLabelSet, Option<String>), RejectReason> {
    let (Some(start), Some(end)) = (raw.find('{'), raw.rfind('}')) else {
        return Err(RejectReason::UnparseableLabels);
    };
    if end < start {
        return Err(RejectReason::UnparseableLabels);
    }
    let ann: Annotation = serde_json::from_str(&raw[start..=end]).map_err(|_| RejectReason::UnparseableLabels)?;
    let labels: Option<Vec<ErrorType>> = ann.labels.iter().map(|l| ErrorType::from_name(l)).collect();
    match labels {
        Some(l) if !l.is_empty() => Ok((
            ErrorLabelSet::from_labels(l),
            ann.sql.filter(|s| !s.trim().is_empty()),
        )),
        _ => Err(RejectReason::UnparseableLabels),
    }
}

/// Ask the assistant to label and fix a prediction; keep the labels only
/// when its fix matches the gold result.
pub fn llm_inject(
    task: &InjectionTask<'_>,
    conn: &Connection,
    backend: &dyn Backend,
    timeout_ms: u64,
) -> Result<InjectOutcome, BackendError> {
    let req = CompletionRequest::new(Role::Assistant, ASSISTANT_SYSTEM, assistant_prompt(task))
        .with_sample(task.sample_id)
        .with_meta("predicted_sql", task.predicted_sql);
    let raw = backend.complete(&req)?;
    let reject = |reason| Ok(InjectOutcome::Rejected { reason });
    let (labels, sql) = match parse_annotation(&raw) {
        Ok(v) => v,
        Err(r) => return reject(r),
    };
    let Some(sql) = sql else {
        return reject(RejectReason::NotEquivalent);
    };
    let gold = execute_on(conn, task.gold_sql, timeout_ms);
    let refined = execute_on(conn, &sql, timeout_ms);
    if !exec_equivalent(&refined, &gold, gold_is_ordered(task.gold_sql)) {
        return reject(RejectReason::NotEquivalent);
    }
    Ok(InjectOutcome::Accepted {
        labels,
        refined_sql: sql,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthConfig {
    /// Target share of no-error samples.
    pub target_ratio: f64,
    pub ratio_tolerance: f64,
    /// Single-error rule samples required per type.
    pub per_label_minimums: BTreeMap<ErrorType, usize>,
    pub compound_fraction: f64,
    pub rule_per_llm: f64,
    /// Fixed rule sample count instead of calibrating from the injection stage.
    pub rule_samples: Option<usize>,
    /// Run parameter, not part of the serialized configuration.
    #[serde(skip)]
    pub seed: u64,
    pub timeout_ms: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            target_ratio: DEFAULT_TARGET_RATIO,
            ratio_tolerance: DEFAULT_RATIO_TOLERANCE,
            per_label_minimums: ErrorType::ALL.iter().map(|t| (*t, 1)).collect(),
            compound_fraction: DEFAULT_COMPOUND_FRACTION,
            rule_per_llm: DEFAULT_RULE_PER_LLM,
            rule_samples: None,
            seed: 0,
            timeout_ms: DEFAULT_VERIFY_TIMEOUT_MS,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum SynthError {
    #[error("corpus yields {found} {label} samples, {needed} required")]
    InsufficientCorpus { label: ErrorType, needed: usize, found: usize },
    #[error("invalid synthesis config: {0}")]
    Config(String),
    #[error(transparent)]
    Schema(#[from] SchemaError),
    #[error(transparent)]
    Perturb(#[from] PerturbError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartitionCount {
    pub partition: String,
    pub sub_type: String,
    pub count: usize,
    pub proportion: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct InjectionStats {
    pub candidates: usize,
    /// Predictions flagged incorrect whose result matches gold anyway.
    pub skipped_equivalent: usize,
    pub accepted: usize,
    pub rejected: BTreeMap<RejectReason, usize>,
    pub acceptance_rate: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompositionReport {
    pub seed: u64,
    pub total: usize,
    pub correct: usize,
    pub incorrect: usize,
    pub correct_ratio: f64,
    pub target_ratio: f64,
    pub ratio_tolerance: f64,
    pub within_tolerance: bool,
    pub partitions: Vec<PartitionCount>,
    pub injection: InjectionStats,
    pub rule_target: usize,
    pub single_labels: BTreeMap<ErrorType, usize>,
    pub compound_pairs: BTreeMap<String, usize>,
    pub shortfalls: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthOutput {
    pub samples: Vec<SynthSample>,
    pub report: CompositionReport,
}

fn mix(seed: u64, a: u64, b: u64) -> u64 {
    // splitmix64 finalizer over the combined inputs
    let mut z = seed ^ a.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ b.wrapping_mul(0xC2B2_AE3D_27D4_EB4F);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

struct Base {
    row: usize,
    ast: SqlAst,
}

struct Db {
    db: Arc<Database>,
    conn: Connection,
}

struct RuleStage<'a> {
    corpus: &'a [CorpusRow],
    dbs: &'a BTreeMap<String, Db>,
    gold: &'a [ExecOutcome],
    bases: Vec<Base>,
    seen: BTreeSet<(String, String)>,
    config: &'a SynthConfig,
}

impl RuleStage<'_> {
    /// Next verified sample walking `order` from `cursor`.
    fn next<F>(&mut self, order: &[usize], cursor: &mut usize, key: u64, op: F) -> Result<Option<(usize, PerturbationOutcome)>, PerturbError>
    where
        F: Fn(&Perturber<'_>, &SqlAst, u64) -> Result<PerturbationOutcome, PerturbError>,
    {
        while *cursor < order.len() {
            let b = order[*cursor];
            *cursor += 1;
            let base = &self.bases[b];
            let row = &self.corpus[base.row];
            let db = &self.dbs[&row.db_id];
            let perturber = Perturber::new(&db.db.schema, &db.conn).with_timeout(self.config.timeout_ms);
            let out = op(&perturber, &base.ast, mix(self.config.seed, b as u64, key))?;
            let Some(sql) = out.perturbed_sql.clone().filter(|_| out.is_applied()) else {
                continue;
            };
            let got = execute_on(&db.conn, &sql, self.config.timeout_ms);
            if exec_equivalent(&got, &self.gold[base.row], gold_is_ordered(&row.gold_sql)) {
                continue;
            }
            if self.seen.insert((row.question_id.clone(), sql)) {
                return Ok(Some((base.row, out)));
            }
        }
        Ok(None)
    }
}

fn rule_sample(row: &CorpusRow, n: usize, out: PerturbationOutcome, source: SampleSource) -> SynthSample {
    let mut s = SynthSample::new(row, n, out.perturbed_sql.unwrap_or_default(), out.injected_labels, source);
    s.localizations = out.localizations;
    s
}

/// Build a labeled dataset from a corpus of gold queries and predictions.
pub fn synthesize_dataset(
    corpus: &[CorpusRow],
    dbs: &DatabaseCache,
    config: &SynthConfig,
    backend: Option<&dyn Backend>,
) -> Result<SynthOutput, SynthError> {
    if !(0.0..1.0).contains(&config.target_ratio) || !(0.0..=1.0).contains(&config.compound_fraction) {
        return Err(SynthError::Config("ratios must lie in [0, 1)".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut shortfalls = Vec::new();
    let mut open = BTreeMap::new();
    for row in corpus {
        if !open.contains_key(&row.db_id) {
            let db = dbs.get(&row.db_id)?;
            let conn = db.connect()?;
            open.insert(row.db_id.clone(), Db { db, conn });
        }
    }
    let gold: Vec<ExecOutcome> = corpus
        .iter()
        .map(|r| execute_on(&open[&r.db_id].conn, &r.gold_sql, config.timeout_ms))
        .collect();

    // Model-assisted injection over incorrect predictions.
    let mut injection = InjectionStats::default();
    let mut llm_samples = Vec::new();
    let candidates: Vec<usize> = (0..corpus.len())
        .filter(|i| corpus[*i].pred_correct == Some(false) && corpus[*i].predicted_sql.is_some())
        .collect();
    injection.candidates = candidates.len();
    match backend {
        None => shortfalls.push("injection partition empty: no assistant backend".to_string()),
        Some(backend) => {
            let results: Vec<Result<Option<InjectOutcome>, SchemaError>> = candidates
                .par_iter()
                .map(|i| {
                    let row = &corpus[*i];
                    let pred = row.predicted_sql.as_deref().unwrap_or_default();
                    let db = dbs.get(&row.db_id)?;
                    let conn = db.connect()?;
                    let got = execute_on(&conn, pred, config.timeout_ms);
                    if exec_equivalent(&got, &gold[*i], gold_is_ordered(&row.gold_sql)) {
                        return Ok(None);
                    }
                    let qss = build_qss(&row.question, &db.schema, None, &[])?;
                    let task = InjectionTask {
                        sample_id: &row.question_id,
                        question: &row.question,
                        qss: &qss,
                        predicted_sql: pred,
                        gold_sql: &row.gold_sql,
                    };
                    Ok(Some(llm_inject(&task, &conn, backend, config.timeout_ms).unwrap_or_else(|e| {
                        log::warn!("{}: assistant failed: {e}", row.question_id);
                        InjectOutcome::Rejected {
                            reason: RejectReason::BackendError,
                        }
                    })))
                })
                .collect();
            for (i, res) in candidates.iter().zip(results) {
                let row = &corpus[*i];
                match res? {
                    None => injection.skipped_equivalent += 1,
                    Some(InjectOutcome::Accepted { labels, .. }) => {
                        let sql = row.predicted_sql.clone().unwrap_or_default();
                        llm_samples.push(SynthSample::new(row, 0, sql, labels, SampleSource::LlmInjected));
                    }
                    Some(InjectOutcome::Rejected { reason }) => *injection.rejected.entry(reason).or_insert(0) += 1,
                }
            }
            injection.accepted = llm_samples.len();
            let tried = injection.candidates - injection.skipped_equivalent;
            injection.acceptance_rate = (tried > 0).then(|| injection.accepted as f64 / tried as f64);
            if llm_samples.is_empty() {
                shortfalls.push("injection partition empty: no sample accepted".to_string());
            }
        }
    }

    // Rule perturbation sized against the injection partition.
    let min_total: usize = config.per_label_minimums.values().sum();
    let rule_target = config.rule_samples.unwrap_or_else(|| {
        let calibrated = (llm_samples.len() as f64 * config.rule_per_llm).round() as usize;
        let floor = (min_total as f64 / (1.0 - config.compound_fraction).max(f64::EPSILON)).ceil() as usize;
        calibrated.max(floor)
    });
    let compound_target = (rule_target as f64 * config.compound_fraction).round() as usize;
    let single_target = rule_target.saturating_sub(compound_target).max(min_total);

    let mut bases = Vec::new();
    for (i, row) in corpus.iter().enumerate() {
        let mut texts = vec![row.gold_sql.as_str()];
        if row.pred_correct == Some(true) {
            if let Some(p) = row.predicted_sql.as_deref().filter(|p| p.trim() != row.gold_sql.trim()) {
                texts.push(p);
            }
        }
        for t in texts {
            match parse_sql(t, Dialect::Sqlite) {
                Ok(ast) => bases.push(Base { row: i, ast }),
                Err(e) => log::warn!("{}: skipping unparseable base: {e}", row.question_id),
            }
        }
    }
    let mut stage = RuleStage {
        corpus,
        dbs: &open,
        gold: &gold,
        bases,
        seen: BTreeSet::new(),
        config,
    };
    let n = stage.bases.len();
    let shuffled = |rng: &mut ChaCha8Rng| {
        let mut o: Vec<usize> = (0..n).collect();
        o.shuffle(rng);
        o
    };

    let mut single = Vec::new();
    let mut single_labels: BTreeMap<ErrorType, usize> = BTreeMap::new();
    let mut lanes: Vec<(ErrorType, Vec<usize>, usize)> =
        ErrorType::ALL.iter().map(|t| (*t, shuffled(&mut rng), 0)).collect();
    let produce_single = |stage: &mut RuleStage<'_>, lane: &mut (ErrorType, Vec<usize>, usize)| {
        let label = lane.0;
        stage.next(&lane.1, &mut lane.2, label.id() as u64, |p, ast, seed| p.perturb(ast, label, seed))
    };
    for lane in lanes.iter_mut() {
        let needed = config.per_label_minimums.get(&lane.0).copied().unwrap_or(0);
        for found in 0..needed {
            match produce_single(&mut stage, lane)? {
                Some((row, out)) => single.push((row, out)),
                None => {
                    return Err(SynthError::InsufficientCorpus {
                        label: lane.0,
                        needed,
                        found,
                    })
                }
            }
            *single_labels.entry(lane.0).or_insert(0) += 1;
        }
    }
    let mut live: Vec<usize> = (0..lanes.len()).collect();
    let mut turn = 0;
    while single.len() < single_target && !live.is_empty() {
        let k = live[turn % live.len()];
        match produce_single(&mut stage, &mut lanes[k])? {
            Some((row, out)) => {
                *single_labels.entry(lanes[k].0).or_insert(0) += 1;
                single.push((row, out));
                turn += 1;
            }
            None => {
                live.retain(|x| *x != k);
            }
        }
    }
    if single.len() < single_target {
        shortfalls.push(format!("single-error rule samples: {} of {single_target}", single.len()));
    }

    let mut pairs = compatible_pairs();
    pairs.shuffle(&mut rng);
    let mut pair_lanes: Vec<((ErrorType, ErrorType), Vec<usize>, usize)> =
        pairs.into_iter().map(|p| (p, shuffled(&mut rng), 0)).collect();
    let mut compound = Vec::new();
    let mut compound_pairs: BTreeMap<String, usize> = BTreeMap::new();
    let mut live: Vec<usize> = (0..pair_lanes.len()).collect();
    let mut turn = 0;
    while compound.len() < compound_target && !live.is_empty() {
        let k = live[turn % live.len()];
        let lane = &mut pair_lanes[k];
        let pair = lane.0;
        let key = 100 + (pair.0.id() * 13 + pair.1.id()) as u64;
        match stage.next(&lane.1, &mut lane.2, key, |p, ast, seed| p.compose(ast, pair, seed))? {
            Some(found) => {
                *compound_pairs.entry(format!("{}+{}", pair.0.name(), pair.1.name())).or_insert(0) += 1;
                compound.push(found);
                turn += 1;
            }
            None => live.retain(|x| *x != k),
        }
    }
    if compound.len() < compound_target {
        shortfalls.push(format!("compound rule samples: {} of {compound_target}", compound.len()));
    }

    // No-error samples: one query per question, gold or a verified-correct
    // prediction.
    let incorrect = llm_samples.len() + single.len() + compound.len();
    let correct_target = (incorrect as f64 * config.target_ratio / (1.0 - config.target_ratio)).round() as usize;
    let mut pool: Vec<(usize, Vec<(String, SampleSource)>)> = Vec::new();
    let mut ids = BTreeSet::new();
    for (i, row) in corpus.iter().enumerate() {
        if !ids.insert(row.question_id.clone()) {
            continue;
        }
        let mut options = vec![(row.gold_sql.clone(), SampleSource::GoldCorrect)];
        if let (Some(true), Some(p)) = (row.pred_correct, row.predicted_sql.as_ref()) {
            let got = execute_on(&open[&row.db_id].conn, p, config.timeout_ms);
            if exec_equivalent(&got, &gold[i], gold_is_ordered(&row.gold_sql)) {
                options.push((p.clone(), SampleSource::PredCorrect));
            }
        }
        pool.push((i, options));
    }
    if pool.len() < correct_target {
        shortfalls.push(format!("no-error pool: {} of {correct_target}", pool.len()));
    }
    let picked: Vec<&(usize, Vec<(String, SampleSource)>)> =
        pool.choose_multiple(&mut rng, correct_target.min(pool.len())).collect();
    let mut correct = Vec::new();
    for (i, options) in picked {
        let (sql, source) = options[rng.gen_range(0..options.len())].clone();
        correct.push(SynthSample::new(&corpus[*i], 0, sql, ErrorLabelSet::NoError, source));
    }

    let mut samples = llm_samples;
    let mut counters: BTreeMap<(String, SampleSource), usize> = BTreeMap::new();
    let mut numbered = |row: usize, source: SampleSource| {
        let c = counters.entry((corpus[row].question_id.clone(), source)).or_insert(0);
        *c += 1;
        *c - 1
    };
    for (row, out) in single {
        let n = numbered(row, SampleSource::RuleSingle);
        samples.push(rule_sample(&corpus[row], n, out, SampleSource::RuleSingle));
    }
    for (row, out) in compound {
        let n = numbered(row, SampleSource::RuleCompound);
        samples.push(rule_sample(&corpus[row], n, out, SampleSource::RuleCompound));
    }
    samples.extend(correct);

    let total = samples.len();
    let count = |s: SampleSource| samples.iter().filter(|x| x.source == s).count();
    let part = |partition: &str, sub_type: &str, count: usize| PartitionCount {
        partition: partition.to_string(),
        sub_type: sub_type.to_string(),
        count,
        proportion: if total == 0 { 0.0 } else { count as f64 / total as f64 },
    };
    let n_correct = count(SampleSource::GoldCorrect) + count(SampleSource::PredCorrect);
    let partitions = vec![
        part("no_error", "correct", n_correct),
        part("rule", "single", count(SampleSource::RuleSingle)),
        part("rule", "compound", count(SampleSource::RuleCompound)),
        part("llm", "injected", count(SampleSource::LlmInjected)),
    ];
    let correct_ratio = if total == 0 { 0.0 } else { n_correct as f64 / total as f64 };
    let report = CompositionReport {
        seed: config.seed,
        total,
        correct: n_correct,
        incorrect: total - n_correct,
        correct_ratio,
        target_ratio: config.target_ratio,
        ratio_tolerance: config.ratio_tolerance,
        within_tolerance: total > 0 && (correct_ratio - config.target_ratio).abs() <= config.ratio_tolerance,
        partitions,
        injection,
        rule_target,
        single_labels,
        compound_pairs,
        shortfalls,
    };
    Ok(SynthOutput { samples, report })
}

#[cfg(test)]
mod tests;
