//! Model-facing detection: prompt serialization and the token grammar.

use serde::{Deserialize, Serialize};

use crate::backend::{Backend, BackendError, CompletionRequest, Role};
use crate::taxonomy::{allowed_token_surfaces, label_for, taxonomy, ErrorLabelSet, ErrorType, TokenError, NULL_TOKEN};

pub const DEFAULT_DETECT_RETRIES: u32 = 2;
/// Result rows shown to the detector.
pub const FEEDBACK_ROWS: usize = 5;

pub const DETECTOR_SYSTEM: &str = "You review SQL queries written for a natural-language question. \
Decide which error types the query contains. Answer only with error tokens separated by spaces.";

#[derive(Debug, thiserror::Error)]
pub enum DetectError {
    #[error(transparent)]
    Backend(#[from] BackendError),
    #[error("detector output is not a token sequence: {0:?}")]
    InvalidOutput(String),
}

/// The detector prompt, one field per section.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DetectionInput {
    pub instructions: String,
    pub question: String,
    pub schema: String,
    pub sql: String,
    pub ast: String,
    pub exec_feedback: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rule_results: Option<ErrorLabelSet>,
}

impl DetectionInput {
    pub fn render(&self) -> String {
        let mut out = String::new();
        let mut section = |title: &str, body: &str| {
            out.push_str("### ");
            out.push_str(title);
            out.push('\n');
            out.push_str(body.trim_end());
            out.push_str("\n\n");
        };
        section("Error types", &self.instructions);
        section("Question", &self.question);
        section("Schema", &self.schema);
        section("SQL", &self.sql);
        section("AST", &self.ast);
        section("Execution result", &self.exec_feedback);
        if let Some(rules) = &self.rule_results {
            section("Rule results", &render_rule_results(rules));
        }
        out.truncate(out.trim_end().len());
        out.push('\n');
        out
    }
}

pub fn render_rule_results(rules: &ErrorLabelSet) -> String {
    if rules.is_no_error() {
        return "none".to_string();
    }
    rules
        .labels()
        .iter()
        .map(|l| format!("{} {}", l.token(), l.name()))
        .collect::<Vec<_>>()
        .join("\n")
}

/// Definitions of every error token plus the answer format.
pub fn instructions() -> String {
    let tax = taxonomy();
    let mut out = String::new();
    for t in ErrorType::ALL {
        let info = t.info();
        out.push_str(&format!("{} {}: {}\n", t.token(), info.display_name, info.description));
    }
    out.push_str(&format!("{} {}: {}\n", NULL_TOKEN, tax.no_error.display_name, tax.no_error.description));
    out.push_str(&format!(
        "Answer with one or more tokens from the list above, separated by spaces. Use {NULL_TOKEN} alone when the query is correct."
    ));
    out
}

/// Parse a raw detector answer. Tokens may be separated by whitespace or
/// commas; any null token makes the whole answer the empty set.
pub fn parse_token_sequence(raw: &str) -> Result<(ErrorLabelSet, Vec<String>), TokenError> {
    let tokens: Vec<String> = raw
        .split(|c: char| c.is_whitespace() || c == ',')
        .filter(|t| !t.is_empty())
        .map(str::to_string)
        .collect();
    if tokens.is_empty() {
        return Err(TokenError::UnknownToken(String::new()));
    }
    let mut labels = Vec::new();
    let mut null = false;
    for t in &tokens {
        match label_for(t)? {
            Some(l) => labels.push(l),
            None => null = true,
        }
    }
    let set = if null {
        ErrorLabelSet::NoError
    } else {
        ErrorLabelSet::from_labels(labels)
    };
    Ok((set, tokens))
}

/// Ask the detector backend for a label set. Unconstrained backends get
/// `retries` extra attempts when the answer breaks the token grammar.
pub fn semantic_detect(
    input: &DetectionInput,
    backend: &dyn Backend,
    sample_id: Option<&str>,
    retries: u32,
) -> Result<(ErrorLabelSet, Vec<String>), DetectError> {
    let constrained = backend.supports_constrained_decoding();
    let mut req = CompletionRequest::new(Role::Detector, DETECTOR_SYSTEM, input.render());
    if constrained {
        req = req.with_allowed_tokens(allowed_token_surfaces());
    }
    if let Some(id) = sample_id {
        req = req.with_sample(id);
    }
    let attempts = if constrained { 1 } else { retries + 1 };
    let mut last = String::new();
    for attempt in 0..attempts {
        let mut r = req.clone();
        if attempt > 0 {
            r.user.push_str(&format!(
                "\nYour previous answer {last:?} was not valid. Reply with error tokens only.\n"
            ));
        }
        last = backend.complete(&r)?;
        match parse_token_sequence(&last) {
            Ok(out) => return Ok(out),
            Err(e) => log::warn!("detector answer rejected ({e}): {last:?}"),
        }
    }
    Err(DetectError::InvalidOutput(last))
}
