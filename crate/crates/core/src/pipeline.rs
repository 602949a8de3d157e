//! Detection followed by refinement, per sample and in batches, plus scoring
//! against gold queries.

use std::collections::BTreeMap;

use rayon::prelude::*;
use rusqlite::Connection;
use serde::{Deserialize, Serialize};

use crate::backend::Backend;
use crate::corpus::Sample;
use crate::db::{Database, DatabaseCache};
use crate::detect::{
    build_detection_input, detect_with_input, prepare, DetectionInput, DetectionReport, DetectionResult, SampleContext,
    DEFAULT_DETECT_RETRIES,
};
use crate::exec::{exec_equivalent, execute_on, gold_is_ordered, SampleRecord, DEFAULT_TIMEOUT_MS};
use crate::refine::{
    extract_context, localize, refine, ExampleStore, Localization, RefineError, RefinementContext, DEFAULT_FEW_SHOT,
    DEFAULT_REFINE_RETRIES,
};
use crate::schema::SchemaError;
use crate::taxonomy::ErrorLabelSet;

#[derive(Clone, Copy)]
pub struct Backends<'a> {
    pub detector: &'a dyn Backend,
    pub localizer: &'a dyn Backend,
    pub refiner: &'a dyn Backend,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineOptions {
    pub detect_retries: u32,
    pub localize_retries: u32,
    pub refine_retries: u32,
    pub few_shot: usize,
    pub timeout_ms: u64,
}

impl Default for PipelineOptions {
    fn default() -> Self {
        PipelineOptions {
            detect_retries: DEFAULT_DETECT_RETRIES,
            localize_retries: DEFAULT_REFINE_RETRIES,
            refine_retries: DEFAULT_REFINE_RETRIES,
            few_shot: DEFAULT_FEW_SHOT,
            timeout_ms: DEFAULT_TIMEOUT_MS,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PipelineStatus {
    /// Nothing detected; the input is returned untouched.
    Passthrough,
    Refined,
    DetectionFailed,
    LocalizationFailed,
    RefinementFailed,
    DatabaseUnavailable,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineRecord {
    pub question_id: String,
    pub db_id: String,
    pub original_sql: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detection: Option<DetectionResult>,
    pub final_labels: ErrorLabelSet,
    pub localizations: Vec<Localization>,
    pub refined_sql: String,
    pub status: PipelineStatus,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub errors: Vec<String>,
}

impl PipelineRecord {
    fn passthrough(sample: &Sample, status: PipelineStatus) -> Self {
        PipelineRecord {
            question_id: sample.question_id.clone(),
            db_id: sample.db_id.clone(),
            original_sql: sample.sql.clone(),
            detection: None,
            final_labels: ErrorLabelSet::NoError,
            localizations: Vec::new(),
            refined_sql: sample.sql.clone(),
            status,
            errors: Vec::new(),
        }
    }

    pub fn flagged(&self) -> bool {
        !self.final_labels.is_no_error()
    }

    pub fn detection_report(&self) -> DetectionReport {
        let mut r = match &self.detection {
            Some(d) => DetectionReport::new(&self.question_id, d),
            None => DetectionReport::new(
                &self.question_id,
                &DetectionResult {
                    rule_set: ErrorLabelSet::NoError,
                    llm_set: ErrorLabelSet::NoError,
                    final_set: self.final_labels.clone(),
                    raw_tokens: Vec::new(),
                },
            ),
        };
        r.error = self.errors.first().cloned().filter(|_| self.status == PipelineStatus::DetectionFailed);
        r
    }

    pub fn refinement_report(&self) -> RefinementReport {
        RefinementReport {
            question_id: self.question_id.clone(),
            original_sql: self.original_sql.clone(),
            final_labels: self.final_labels.clone(),
            localizations: self.localizations.clone(),
            refined_sql: self.refined_sql.clone(),
            status: self.status,
        }
    }
}

/// One line of the refinement report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RefinementReport {
    pub question_id: String,
    pub original_sql: String,
    pub final_labels: ErrorLabelSet,
    pub localizations: Vec<Localization>,
    pub refined_sql: String,
    pub status: PipelineStatus,
}

/// Detect, and when something is found localize, gather context and refine.
/// Stage failures are recorded and leave the input SQL in place.
pub fn run_pipeline(
    sample: &Sample,
    db: &Database,
    conn: Option<&Connection>,
    backends: Backends<'_>,
    opts: &PipelineOptions,
    store: &ExampleStore,
) -> PipelineRecord {
    let cx = prepare(sample, &db.schema, conn, opts.timeout_ms);
    match detect_with_input(sample, &cx, &db.schema, conn, backends.detector, opts.detect_retries) {
        Ok((detection, input)) => refine_stage(sample, db, &cx, &input, detection, backends, opts, store),
        Err(e) => {
            let mut rec = PipelineRecord::passthrough(sample, PipelineStatus::DetectionFailed);
            rec.errors.push(e.to_string());
            rec
        }
    }
}

/// Detection only; the record passes the input through.
pub fn detect_sample(
    sample: &Sample,
    db: &Database,
    conn: Option<&Connection>,
    detector: &dyn Backend,
    opts: &PipelineOptions,
) -> PipelineRecord {
    let cx = prepare(sample, &db.schema, conn, opts.timeout_ms);
    match detect_with_input(sample, &cx, &db.schema, conn, detector, opts.detect_retries) {
        Ok((detection, _)) => {
            let mut rec = PipelineRecord::passthrough(sample, PipelineStatus::Passthrough);
            rec.final_labels = detection.final_set.clone();
            rec.detection = Some(detection);
            rec
        }
        Err(e) => {
            let mut rec = PipelineRecord::passthrough(sample, PipelineStatus::DetectionFailed);
            rec.errors.push(e.to_string());
            rec
        }
    }
}

/// Refinement of a sample whose detection is already known.
pub fn refine_detected(
    sample: &Sample,
    db: &Database,
    conn: Option<&Connection>,
    detection: DetectionResult,
    backends: Backends<'_>,
    opts: &PipelineOptions,
    store: &ExampleStore,
) -> PipelineRecord {
    let cx = prepare(sample, &db.schema, conn, opts.timeout_ms);
    let input = build_detection_input(sample, &cx.qss, cx.ast.as_ref(), &cx.feedback, &detection.rule_set);
    refine_stage(sample, db, &cx, &input, detection, backends, opts, store)
}

#[allow(clippy::too_many_arguments)]
fn refine_stage(
    sample: &Sample,
    db: &Database,
    cx: &SampleContext,
    input: &DetectionInput,
    detection: DetectionResult,
    backends: Backends<'_>,
    opts: &PipelineOptions,
    store: &ExampleStore,
) -> PipelineRecord {
    let schema = &db.schema;
    let id = Some(sample.question_id.as_str());
    let mut rec = PipelineRecord::passthrough(sample, PipelineStatus::Passthrough);
    rec.final_labels = detection.final_set.clone();
    rec.detection = Some(detection);
    if !rec.flagged() {
        return rec;
    }
    let ast = cx.ast();
    let locs = match localize(input, &rec.final_labels, ast, schema, backends.localizer, id, opts.localize_retries) {
        Ok(l) => l,
        Err(e) => {
            rec.status = PipelineStatus::LocalizationFailed;
            rec.errors.push(e.to_string());
            return rec;
        }
    };
    let entries = locs
        .iter()
        .map(|l| extract_context(&sample.sql, ast, schema, &cx.qss, l, store, opts.few_shot))
        .collect();
    rec.localizations = locs;
    let ctx = RefinementContext::new(sample.question.clone(), entries);
    match refine(&sample.sql, &ctx, backends.refiner, id, opts.refine_retries) {
        Ok(sql) => {
            rec.refined_sql = sql;
            rec.status = PipelineStatus::Refined;
        }
        Err(e) => {
            rec.status = PipelineStatus::RefinementFailed;
            rec.errors.push(e.to_string());
            if let RefineError::Backend(b) = &e {
                log::warn!("{}: refiner failed: {b}", sample.question_id);
            }
        }
    }
    rec
}

/// Open each sample's database and run `f`, in parallel, keeping input order.
pub fn for_each_sample<F>(samples: &[Sample], dbs: &DatabaseCache, f: F) -> Vec<PipelineRecord>
where
    F: Fn(usize, &Sample, &Database, &Connection) -> PipelineRecord + Sync,
{
    samples
        .par_iter()
        .enumerate()
        .map(|(i, s)| {
            let opened = dbs.get(&s.db_id).and_then(|db| db.connect().map(|c| (db, c)));
            match opened {
                Ok((db, conn)) => f(i, s, &db, &conn),
                Err(e) => {
                    let mut rec = PipelineRecord::passthrough(s, PipelineStatus::DatabaseUnavailable);
                    rec.errors.push(e.to_string());
                    rec
                }
            }
        })
        .collect()
}

/// Run every sample, in parallel, keeping input order.
pub fn run_batch(
    samples: &[Sample],
    dbs: &DatabaseCache,
    backends: Backends<'_>,
    opts: &PipelineOptions,
    store: &ExampleStore,
) -> Vec<PipelineRecord> {
    for_each_sample(samples, dbs, |_, s, db, conn| run_pipeline(s, db, Some(conn), backends, opts, store))
}

#[derive(Debug, thiserror::Error)]
pub enum ScoreError {
    #[error("sample {0} has no gold query")]
    MissingGold(String),
    #[error("no sample for record {0}")]
    UnknownSample(String),
    #[error(transparent)]
    Schema(#[from] SchemaError),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct EvalOptions {
    /// Compare rows as sequences for every sample, not only when the gold
    /// query has a top-level ORDER BY.
    pub order_sensitive: bool,
    pub timeout_ms: u64,
}

impl Default for EvalOptions {
    fn default() -> Self {
        EvalOptions {
            order_sensitive: false,
            timeout_ms: DEFAULT_TIMEOUT_MS,
        }
    }
}

/// Compare original and refined SQL of each record against its gold query.
pub fn score_records(
    records: &[RefinementReport],
    samples: &[Sample],
    dbs: &DatabaseCache,
    gold_labels: &BTreeMap<String, ErrorLabelSet>,
    opts: &EvalOptions,
) -> Result<Vec<SampleRecord>, ScoreError> {
    let timeout_ms = opts.timeout_ms;
    let by_id: BTreeMap<&str, &Sample> = samples.iter().map(|s| (s.question_id.as_str(), s)).collect();
    records
        .par_iter()
        .map(|r| {
            let s = by_id
                .get(r.question_id.as_str())
                .ok_or_else(|| ScoreError::UnknownSample(r.question_id.clone()))?;
            let gold = s.gold_sql.as_deref().ok_or_else(|| ScoreError::MissingGold(r.question_id.clone()))?;
            let conn = dbs.get(&s.db_id)?.connect()?;
            let ordered = opts.order_sensitive || gold_is_ordered(gold);
            let g = execute_on(&conn, gold, timeout_ms);
            let before_exec = execute_on(&conn, &r.original_sql, timeout_ms);
            let before = exec_equivalent(&before_exec, &g, ordered);
            let (after, changed) = if r.refined_sql == r.original_sql {
                (before, false)
            } else {
                let after_exec = execute_on(&conn, &r.refined_sql, timeout_ms);
                let after = exec_equivalent(&after_exec, &g, ordered);
                (after, after != before || !exec_equivalent(&after_exec, &before_exec, ordered))
            };
            Ok(SampleRecord {
                question_id: r.question_id.clone(),
                gold_correct_before: before,
                flagged: !r.final_labels.is_no_error(),
                gold_correct_after: after,
                changed,
                final_labels: r.final_labels.clone(),
                gold_labels: gold_labels.get(&r.question_id).cloned(),
            })
        })
        .collect()
}
