//! Error detection: static rules, model-based detection and aggregation.

mod rules;
mod semantic;

use rusqlite::Connection;
use serde::{Deserialize, Serialize};

use crate::ast::{parse_sql, Dialect, ParseError, SqlAst};
use crate::backend::Backend;
use crate::corpus::Sample;
use crate::exec::{execute_on, ExecOutcome};
use crate::schema::{build_qss, link_values, serialize_mschema, QuestionSchemaStructure, SchemaGraph, DEFAULT_LINK_THRESHOLD};
use crate::taxonomy::ErrorLabelSet;

pub use rules::{coerce, exec_failure_label, in_domain, literal_value, static_detect, value_sites, ValueSite};
pub use semantic::{
    instructions, parse_token_sequence, render_rule_results, semantic_detect, DetectError, DetectionInput,
    DEFAULT_DETECT_RETRIES, DETECTOR_SYSTEM, FEEDBACK_ROWS,
};

/// Everything about one sample that detection and refinement read.
#[derive(Debug, Clone)]
pub struct SampleContext {
    pub ast: Result<SqlAst, ParseError>,
    pub qss: QuestionSchemaStructure,
    pub feedback: ExecOutcome,
}

impl SampleContext {
    pub fn ast(&self) -> Option<&SqlAst> {
        self.ast.as_ref().ok()
    }
}

/// Parse, link and execute `sample.sql`. Without a connection value links
/// are skipped and execution reports an error.
pub fn prepare(sample: &Sample, schema: &SchemaGraph, conn: Option<&Connection>, timeout_ms: u64) -> SampleContext {
    let links = conn
        .map(|c| link_values(&sample.question, schema, c, DEFAULT_LINK_THRESHOLD))
        .unwrap_or_default();
    let qss = build_qss(&sample.question, schema, None, &links).expect("unpruned structure always builds");
    let feedback = match conn {
        Some(c) => execute_on(c, &sample.sql, timeout_ms),
        None => ExecOutcome::Error {
            message: "database unavailable".to_string(),
            elapsed_ms: 0,
        },
    };
    SampleContext {
        ast: parse_sql(&sample.sql, Dialect::Sqlite),
        qss,
        feedback,
    }
}

pub fn build_detection_input(
    sample: &Sample,
    qss: &QuestionSchemaStructure,
    ast: Result<&SqlAst, &ParseError>,
    feedback: &ExecOutcome,
    rule_set: &ErrorLabelSet,
) -> DetectionInput {
    let ast = match ast {
        Ok(a) => a.to_indented_tree(),
        Err(e) => format!("unparseable: {e}"),
    };
    DetectionInput {
        instructions: instructions(),
        question: sample.question.clone(),
        schema: serialize_mschema(qss),
        sql: sample.sql.clone(),
        ast,
        exec_feedback: feedback.preview(FEEDBACK_ROWS),
        rule_results: Some(rule_set.clone()),
    }
}

/// Union of both detectors; empty means no error.
pub fn aggregate(rule_set: &ErrorLabelSet, llm_set: &ErrorLabelSet) -> ErrorLabelSet {
    rule_set.union(llm_set)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DetectionResult {
    pub rule_set: ErrorLabelSet,
    pub llm_set: ErrorLabelSet,
    #[serde(rename = "final")]
    pub final_set: ErrorLabelSet,
    pub raw_tokens: Vec<String>,
}

impl DetectionResult {
    pub fn flagged(&self) -> bool {
        !self.final_set.is_no_error()
    }
}

/// Static rules, then the detector prompt augmented with their results,
/// then aggregation. Also returns the prompt for later stages.
pub fn detect_with_input(
    sample: &Sample,
    cx: &SampleContext,
    schema: &SchemaGraph,
    conn: Option<&Connection>,
    backend: &dyn Backend,
    retries: u32,
) -> Result<(DetectionResult, DetectionInput), DetectError> {
    let rule_set = static_detect(cx.ast(), schema, conn, &cx.feedback);
    let input = build_detection_input(sample, &cx.qss, cx.ast.as_ref(), &cx.feedback, &rule_set);
    let (llm_set, raw_tokens) = semantic_detect(&input, backend, Some(&sample.question_id), retries)?;
    let final_set = aggregate(&rule_set, &llm_set);
    Ok((
        DetectionResult {
            rule_set,
            llm_set,
            final_set,
            raw_tokens,
        },
        input,
    ))
}

pub fn detect(
    sample: &Sample,
    cx: &SampleContext,
    schema: &SchemaGraph,
    conn: Option<&Connection>,
    backend: &dyn Backend,
) -> Result<DetectionResult, DetectError> {
    detect_with_input(sample, cx, schema, conn, backend, DEFAULT_DETECT_RETRIES).map(|(r, _)| r)
}

/// One line of the detection report.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DetectionReport {
    pub question_id: String,
    pub rule_errors: ErrorLabelSet,
    pub llm_errors: ErrorLabelSet,
    #[serde(rename = "final")]
    pub final_set: ErrorLabelSet,
    pub flagged: bool,
    pub raw_tokens: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl DetectionReport {
    pub fn new(question_id: &str, r: &DetectionResult) -> Self {
        DetectionReport {
            question_id: question_id.to_string(),
            rule_errors: r.rule_set.clone(),
            llm_errors: r.llm_set.clone(),
            final_set: r.final_set.clone(),
            flagged: r.flagged(),
            raw_tokens: r.raw_tokens.clone(),
            error: None,
        }
    }

    /// The detection this line records; `None` when detection failed.
    pub fn result(&self) -> Option<DetectionResult> {
        self.error.is_none().then(|| DetectionResult {
            rule_set: self.rule_errors.clone(),
            llm_set: self.llm_errors.clone(),
            final_set: self.final_set.clone(),
            raw_tokens: self.raw_tokens.clone(),
        })
    }
}

#[cfg(test)]
mod tests;
