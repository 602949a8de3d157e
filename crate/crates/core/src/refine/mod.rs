//! Error localization, context extraction and single-pass refinement.

mod context;
mod localize;

use crate::ast::{parse_sql, Dialect};
use crate::backend::{Backend, BackendError, CompletionRequest, Role};

pub use context::{
    extract_context, schema_subgraph, ContextEntry, Example, ExampleStore, RefinementContext, SchemaSubgraph,
    DEFAULT_FEW_SHOT, FEWSHOT_JSON,
};
pub use localize::{
    localize, resolve_block, resolve_fragment, resolve_schema_element, Localization, LOCALIZER_SYSTEM, UNSPECIFIED,
};

pub const DEFAULT_REFINE_RETRIES: u32 = 2;

pub const REFINER_SYSTEM: &str = "You repair SQL queries. Fix every listed error, in the order given, and change \
nothing else. Reply with the corrected SQL query only.";

#[derive(Debug, thiserror::Error)]
pub enum RefineError {
    #[error(transparent)]
    Backend(#[from] BackendError),
    #[error("localizer output has no usable block: {0:?}")]
    MalformedLocalization(String),
    #[error("no error to localize")]
    NothingToLocalize,
    #[error("refiner output is not SQL: {0:?}")]
    RefinementFailed(String),
}

/// The refiner prompt: question, original query, then each error in order.
pub fn render_refinement_prompt(original_sql: &str, ctx: &RefinementContext) -> String {
    let mut out = format!("### Question\n{}\n\n### SQL\n{}\n", ctx.question, original_sql);
    for (i, e) in ctx.entries.iter().enumerate() {
        out.push_str(&format!("\n### Error {} {} {}\n", i + 1, e.error_type.token(), e.error_type.display_name()));
        out.push_str(&format!("Fragment: {}\n", e.fragment_sql));
        if !e.subgraph.graph.tables.is_empty() {
            out.push_str("Schema:\n");
            for t in &e.subgraph.graph.tables {
                let cols: Vec<String> = e
                    .subgraph
                    .graph
                    .columns_of(&t.name)
                    .into_iter()
                    .map(|c| if c.primary_key { format!("{} PK", c.name) } else { c.name.clone() })
                    .collect();
                out.push_str(&format!("  {}({})\n", t.name, cols.join(", ")));
            }
            for (a, b) in e.subgraph.graph.foreign_keys() {
                out.push_str(&format!("  {a} -> {b}\n"));
            }
        }
        out.push_str(&e.guideline.render());
        for ex in &e.examples {
            out.push_str(&format!(
                "Example: {}\n  Fixed: {}\n  Why: {}\n",
                ex.erroneous_sql, ex.corrected_sql, ex.rationale
            ));
        }
    }
    out
}

/// SQL text from a refiner reply: the body of a code fence if present, else
/// everything from the first line that starts a query.
pub fn extract_sql(reply: &str) -> Option<String> {
    let text = match reply.split_once("```") {
        Some((_, rest)) => {
            let rest = match rest.split_once('\n') {
                Some((tag, body)) if tag.trim().chars().all(|c| c.is_ascii_alphanumeric()) => body,
                _ => rest,
            };
            rest.split("```").next().unwrap_or(rest).to_string()
        }
        None => {
            let lines: Vec<&str> = reply.lines().collect();
            let first = lines.iter().position(|l| {
                let l = l.trim_start().to_ascii_uppercase();
                l.starts_with("SELECT") || l.starts_with("WITH")
            })?;
            lines[first..].join("\n")
        }
    };
    let text = text.trim();
    (!text.is_empty()).then(|| text.to_string())
}

/// One refiner call with every error in priority order. Unparseable replies
/// are retried up to `retries` times.
pub fn refine(
    original_sql: &str,
    ctx: &RefinementContext,
    backend: &dyn Backend,
    sample_id: Option<&str>,
    retries: u32,
) -> Result<String, RefineError> {
    let ordered;
    let ctx = if ctx.is_sorted() {
        ctx
    } else {
        ordered = RefinementContext::new(ctx.question.clone(), ctx.entries.clone());
        &ordered
    };
    let mut req = CompletionRequest::new(Role::Refiner, REFINER_SYSTEM, render_refinement_prompt(original_sql, ctx));
    if let Some(id) = sample_id {
        req = req.with_sample(id);
    }
    let mut last = String::new();
    for _ in 0..=retries {
        last = backend.complete(&req)?;
        if let Some(sql) = extract_sql(&last) {
            if parse_sql(&sql, Dialect::Sqlite).is_ok() {
                return Ok(sql);
            }
        }
        log::warn!("refiner reply is not SQL: {last:?}");
    }
    Err(RefineError::RefinementFailed(last))
}

#[cfg(test)]
mod tests;
