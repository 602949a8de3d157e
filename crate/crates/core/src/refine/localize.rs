//! Error localization: ask the localizer for one block per detected error and
//! resolve its fragments and schema names.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::ast::{tokenize, NodeId, SqlAst, TokenKind};
use crate::backend::{Backend, CompletionRequest, Role};
use crate::detect::DetectionInput;
use crate::schema::{SchemaGraph, SchemaNode};
use crate::taxonomy::{parse_blocks, template_for, ErrorLabelSet, ErrorType, FilledGuideline, LocalizationBlock};

use super::RefineError;

/// Value given to template slots the localizer left empty.
pub const UNSPECIFIED: &str = "unspecified";

pub const LOCALIZER_SYSTEM: &str = "You locate errors in SQL queries. For every listed error type write one block:\n\
[ERROR] <error type>\nnodes: <exact SQL fragment> | <another fragment>\nschema: <table.column> | <table>\n\
<slot>: <value>\n[END]\nFill every slot of the error type's guideline.";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Localization {
    pub error_type: ErrorType,
    pub error_nodes: BTreeSet<NodeId>,
    pub schema_elements: Vec<SchemaNode>,
    pub guideline: FilledGuideline,
    /// No usable fragment: the whole statement stands in for the error.
    pub downgraded: bool,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

fn token_texts(text: &str) -> Option<Vec<String>> {
    let toks = tokenize(text).ok()?;
    if toks.is_empty() {
        return None;
    }
    Some(
        toks.into_iter()
            .map(|t| match t.kind {
                TokenKind::Word => t.text.to_ascii_lowercase(),
                _ => t.text,
            })
            .collect(),
    )
}

/// Match a fragment to a node: a node whose token span is exactly the
/// fragment (outermost when nested), else the smallest node enclosing the
/// fragment's unique occurrence in the token stream.
pub fn resolve_fragment(ast: &SqlAst, fragment: &str) -> Option<NodeId> {
    let want = token_texts(fragment)?;
    let src: Vec<String> = ast
        .source_tokens()
        .iter()
        .map(|t| match t.kind {
            TokenKind::Word => t.text.to_ascii_lowercase(),
            _ => t.text.clone(),
        })
        .collect();
    let occurrences: Vec<usize> = (0..src.len().saturating_sub(want.len() - 1))
        .filter(|i| src[*i..*i + want.len()] == want[..])
        .collect();
    let [start] = occurrences[..] else {
        return None;
    };
    let end = start + want.len() - 1;
    let root = ast.root();
    let mut best = root;
    for id in ast.descendants(root) {
        let span = ast.node(id).span;
        if span.start == start && span.end == end {
            return Some(id);
        }
        if span.start <= start && span.end >= end && span.len() < ast.node(best).span.len() {
            best = id;
        }
    }
    Some(best)
}

/// Canonical schema element for `t.c`, `t`, or an unambiguous bare column.
pub fn resolve_schema_element(schema: &SchemaGraph, name: &str) -> Option<SchemaNode> {
    let name = name.trim();
    if let Some((t, c)) = name.split_once('.') {
        return schema.column(t.trim(), c.trim()).map(|col| SchemaNode::column(&col.id()));
    }
    if let Some(t) = schema.canonical_table(name) {
        return Some(SchemaNode::table(t));
    }
    match schema.tables_with_column(name)[..] {
        [t] => schema.column(t, name).map(|col| SchemaNode::column(&col.id())),
        _ => None,
    }
}

/// Turn a localizer block into a localization against `ast`.
pub fn resolve_block(block: &LocalizationBlock, ast: Option<&SqlAst>, schema: &SchemaGraph) -> Localization {
    let mut warnings = Vec::new();
    let mut nodes = BTreeSet::new();
    let mut downgraded = false;
    for frag in &block.nodes {
        match ast.and_then(|a| resolve_fragment(a, frag)) {
            Some(id) => {
                nodes.insert(id);
            }
            None => {
                downgraded = true;
                warnings.push(format!("fragment {frag:?} not found in the query"));
            }
        }
    }
    if nodes.is_empty() {
        downgraded = true;
    }
    if downgraded {
        log::warn!("{}: localization downgraded to the whole statement", block.error_type);
        nodes.clear();
    }
    let mut elements = Vec::new();
    for s in &block.schema {
        match resolve_schema_element(schema, s) {
            Some(e) if !elements.contains(&e) => elements.push(e),
            Some(_) => {}
            None => warnings.push(format!("schema element {s:?} does not exist")),
        }
    }
    let mut values = block.slots.clone();
    let template = template_for(block.error_type);
    if !values.contains_key("nodes") && template.slot_names().contains(&"nodes") {
        values.insert("nodes".into(), block.nodes.join(" | "));
    }
    for slot in template.slot_names() {
        let v = values.entry(slot.to_string()).or_default();
        if v.trim().is_empty() {
            *v = UNSPECIFIED.to_string();
            warnings.push(format!("slot {slot} left empty"));
        }
    }
    Localization {
        error_type: block.error_type,
        error_nodes: nodes,
        schema_elements: elements,
        guideline: FilledGuideline {
            error_type: block.error_type,
            values,
        },
        downgraded,
        warnings,
    }
}

fn localizer_prompt(input: &DetectionInput, labels: &[ErrorType]) -> String {
    let mut out = input.render();
    out.push_str("\n### Detected errors\n");
    for l in labels {
        out.push_str(&format!("{} {}\n", l.token(), l.name()));
        out.push_str(&template_for(*l).render_blank());
    }
    out
}

/// One joint call covering every detected error. Retries when no requested
/// block comes back; types still missing afterwards are downgraded.
pub fn localize(
    input: &DetectionInput,
    labels: &ErrorLabelSet,
    ast: Option<&SqlAst>,
    schema: &SchemaGraph,
    backend: &dyn Backend,
    sample_id: Option<&str>,
    retries: u32,
) -> Result<Vec<Localization>, RefineError> {
    let wanted = labels.labels();
    if wanted.is_empty() {
        return Err(RefineError::NothingToLocalize);
    }
    let names: Vec<&str> = wanted.iter().map(|l| l.name()).collect();
    let mut req = CompletionRequest::new(Role::Localizer, LOCALIZER_SYSTEM, localizer_prompt(input, &wanted))
        .with_meta("error_types", names.join(","));
    if let Some(id) = sample_id {
        req = req.with_sample(id);
    }
    let mut last = String::new();
    for _ in 0..=retries {
        last = backend.complete(&req)?;
        let blocks: Vec<LocalizationBlock> = parse_blocks(&last)
            .into_iter()
            .filter(|b| wanted.contains(&b.error_type))
            .collect();
        if blocks.is_empty() {
            continue;
        }
        return Ok(wanted
            .iter()
            .map(|l| match blocks.iter().find(|b| b.error_type == *l) {
                Some(b) => resolve_block(b, ast, schema),
                None => {
                    let mut loc = resolve_block(&LocalizationBlock::new(*l), ast, schema);
                    loc.downgraded = true;
                    loc.warnings.push("localizer returned no block".into());
                    loc
                }
            })
            .collect());
    }
    Err(RefineError::MalformedLocalization(last))
}
