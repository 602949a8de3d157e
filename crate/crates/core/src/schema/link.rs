use std::collections::BTreeSet;

use rusqlite::Connection;
use serde::{Deserialize, Serialize};

use super::graph::{lookup_values, ColumnId, SchemaGraph, DEFAULT_LOOKUP_LIMIT};
use super::SchemaError;
use crate::value::Value;

pub const DEFAULT_LINK_THRESHOLD: f64 = 0.85;
/// Longest question n-gram considered for value matching.
pub const MAX_SPAN_WORDS: usize = 4;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuestionNode {
    pub text: String,
    /// Character offsets, end exclusive.
    pub start: usize,
    pub end: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValueMatch {
    pub span: QuestionNode,
    pub column: ColumnId,
    pub value: String,
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum LinkEdge {
    QToTable { q: usize, table: String },
    QToColumn { q: usize, column: ColumnId },
    ValueMatch { q: usize, column: ColumnId, value: String },
}

impl LinkEdge {
    pub fn question_index(&self) -> usize {
        match self {
            LinkEdge::QToTable { q, .. } | LinkEdge::QToColumn { q, .. } | LinkEdge::ValueMatch { q, .. } => *q,
        }
    }

    pub fn table(&self) -> &str {
        match self {
            LinkEdge::QToTable { table, .. } => table,
            LinkEdge::QToColumn { column, .. } | LinkEdge::ValueMatch { column, .. } => &column.table,
        }
    }

    pub fn column(&self) -> Option<&ColumnId> {
        match self {
            LinkEdge::QToTable { .. } => None,
            LinkEdge::QToColumn { column, .. } | LinkEdge::ValueMatch { column, .. } => Some(column),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuestionSchemaStructure {
    pub question: String,
    pub question_nodes: Vec<QuestionNode>,
    pub schema: SchemaGraph,
    pub link_edges: Vec<LinkEdge>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpanAssignment {
    pub span: String,
    pub table: String,
    #[serde(default)]
    pub column: Option<String>,
}

/// Output of an external schema linker.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SchemaLinkingResult {
    pub tables: Vec<String>,
    /// `[table, column]` pairs.
    pub columns: Vec<(String, String)>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub assignments: Vec<SpanAssignment>,
}

/// Word tokens of a question with character offsets.
pub fn question_words(question: &str) -> Vec<QuestionNode> {
    let mut out = Vec::new();
    let mut start = None;
    let chars: Vec<char> = question.chars().collect();
    for (i, c) in chars.iter().enumerate() {
        let word = c.is_alphanumeric() || *c == '_' || *c == '\'' && start.is_some();
        match (word, start) {
            (true, None) => start = Some(i),
            (false, Some(s)) => {
                out.push(node(&chars, s, i));
                start = None;
            }
            _ => {}
        }
    }
    if let Some(s) = start {
        out.push(node(&chars, s, chars.len()));
    }
    out
}

fn node(chars: &[char], start: usize, end: usize) -> QuestionNode {
    let mut end = end;
    while end > start + 1 && chars[end - 1] == '\'' {
        end -= 1;
    }
    QuestionNode {
        text: chars[start..end].iter().collect(),
        start,
        end,
    }
}

/// Token-aligned spans of up to [`MAX_SPAN_WORDS`] words.
fn question_spans(question: &str) -> Vec<QuestionNode> {
    let words = question_words(question);
    let chars: Vec<char> = question.chars().collect();
    let mut out = Vec::new();
    for i in 0..words.len() {
        for j in i..words.len().min(i + MAX_SPAN_WORDS) {
            let (s, e) = (words[i].start, words[j].end);
            out.push(QuestionNode {
                text: chars[s..e].iter().collect(),
                start: s,
                end: e,
            });
        }
    }
    out
}

pub fn fuzzy_ratio(a: &str, b: &str) -> f64 {
    strsim::normalized_levenshtein(&a.to_lowercase(), &b.to_lowercase())
}

/// Fuzzy-match question spans against cell values of text and integer
/// columns. One match per (column, value): the best-scoring span, earliest
/// on ties.
pub fn link_values(
    question: &str,
    schema: &SchemaGraph,
    conn: &Connection,
    threshold: f64,
) -> Vec<ValueMatch> {
    let spans: Vec<(QuestionNode, String)> = question_spans(question)
        .into_iter()
        .filter(|s| s.text.chars().count() >= 2)
        .map(|s| {
            let folded = s.text.to_lowercase();
            (s, folded)
        })
        .collect();
    let mut out = Vec::new();
    for col in &schema.columns {
        let Ok(domain) = lookup_values(&col.id(), conn, DEFAULT_LOOKUP_LIMIT) else {
            continue;
        };
        for v in &domain.values {
            let text = match v {
                Value::Text(t) => t.clone(),
                Value::Integer(i) => i.to_string(),
                _ => continue,
            };
            let folded = text.to_lowercase();
            let vlen = folded.chars().count();
            if vlen == 0 {
                continue;
            }
            let mut best: Option<(f64, &QuestionNode)> = None;
            for (span, stext) in &spans {
                let slen = stext.chars().count();
                let longer = slen.max(vlen) as f64;
                if (slen.abs_diff(vlen) as f64) / longer > 1.0 - threshold + 1e-12 {
                    continue;
                }
                let r = strsim::normalized_levenshtein(stext, &folded);
                if r >= threshold && best.is_none_or(|(b, _)| r > b) {
                    best = Some((r, span));
                }
            }
            if let Some((ratio, span)) = best {
                out.push(ValueMatch {
                    span: span.clone(),
                    column: col.id(),
                    value: text,
                    ratio,
                });
            }
        }
    }
    out
}

fn singular(word: &str) -> String {
    let w = word.to_lowercase();
    if w.len() > 3 && w.ends_with("ies") {
        format!("{}y", &w[..w.len() - 3])
    } else if w.len() > 2 && w.ends_with('s') && !w.ends_with("ss") {
        w[..w.len() - 1].to_string()
    } else {
        w
    }
}

fn name_words(name: &str) -> Vec<String> {
    let mut words = Vec::new();
    let mut cur = String::new();
    let chars: Vec<char> = name.chars().collect();
    for (i, c) in chars.iter().enumerate() {
        let boundary = !c.is_alphanumeric()
            || (c.is_uppercase() && i > 0 && chars[i - 1].is_lowercase());
        if boundary && !cur.is_empty() {
            words.push(singular(&cur));
            cur.clear();
        }
        if c.is_alphanumeric() {
            cur.push(*c);
        }
    }
    if !cur.is_empty() {
        words.push(singular(&cur));
    }
    words
}

fn index_of(nodes: &mut Vec<QuestionNode>, n: &QuestionNode) -> usize {
    if let Some(i) = nodes.iter().position(|x| x.start == n.start && x.end == n.end) {
        return i;
    }
    nodes.push(n.clone());
    nodes.len() - 1
}

fn resolve_table(schema: &SchemaGraph, name: &str) -> Result<String, SchemaError> {
    schema
        .canonical_table(name)
        .map(str::to_string)
        .ok_or_else(|| SchemaError::UnresolvedLinkTarget(name.to_string()))
}

fn resolve_column(schema: &SchemaGraph, table: &str, column: &str) -> Result<ColumnId, SchemaError> {
    schema
        .column(table, column)
        .map(|c| c.id())
        .ok_or_else(|| SchemaError::UnresolvedLinkTarget(format!("{table}.{column}")))
}

/// PK/FK closure of a table/column selection.
pub(crate) fn closure(schema: &SchemaGraph, tables: &[String], columns: &[ColumnId]) -> Vec<ColumnId> {
    let mut keep: BTreeSet<ColumnId> = columns.iter().cloned().collect();
    let has = |t: &str| tables.iter().any(|x| x.eq_ignore_ascii_case(t));
    for t in tables {
        for pk in schema.primary_keys(t) {
            keep.insert(pk.id());
        }
    }
    for (a, b) in schema.foreign_keys() {
        if has(&a.table) && has(&b.table) {
            keep.insert(a);
            keep.insert(b);
        }
    }
    schema
        .columns
        .iter()
        .map(|c| c.id())
        .filter(|c| keep.contains(c))
        .collect()
}

pub fn build_qss(
    question: &str,
    schema: &SchemaGraph,
    sl: Option<&SchemaLinkingResult>,
    value_links: &[ValueMatch],
) -> Result<QuestionSchemaStructure, SchemaError> {
    let mut nodes = question_words(question);
    let mut edges = Vec::new();

    let pruned = match sl {
        Some(sl) => {
            let mut tables = Vec::new();
            for t in &sl.tables {
                tables.push(resolve_table(schema, t)?);
            }
            let mut columns = Vec::new();
            for (t, c) in &sl.columns {
                let id = resolve_column(schema, t, c)?;
                if !tables.contains(&id.table) {
                    tables.push(id.table.clone());
                }
                columns.push(id);
            }
            for a in &sl.assignments {
                resolve_table(schema, &a.table)?;
                if let Some(c) = &a.column {
                    resolve_column(schema, &a.table, c)?;
                }
            }
            for v in value_links {
                if tables.iter().any(|t| t == &v.column.table) {
                    columns.push(v.column.clone());
                }
            }
            let tables: Vec<String> = schema
                .tables
                .iter()
                .filter(|t| tables.contains(&t.name))
                .map(|t| t.name.clone())
                .collect();
            let columns = closure(schema, &tables, &columns);
            let pruned = schema.project(&tables, &columns);

            let words = nodes.clone();
            for a in &sl.assignments {
                let span = question_spans(question)
                    .into_iter()
                    .find(|s| s.text.eq_ignore_ascii_case(&a.span))
                    .or_else(|| words.iter().find(|w| w.text.eq_ignore_ascii_case(&a.span)).cloned());
                let Some(span) = span else { continue };
                let q = index_of(&mut nodes, &span);
                let table = resolve_table(schema, &a.table)?;
                match &a.column {
                    Some(c) => {
                        let id = resolve_column(schema, &table, c)?;
                        if pruned.column(&id.table, &id.column).is_some() {
                            edges.push(LinkEdge::QToColumn { q, column: id });
                        }
                    }
                    None => {
                        if pruned.has_table(&table) {
                            edges.push(LinkEdge::QToTable { q, table });
                        }
                    }
                }
            }
            pruned
        }
        None => {
            let words = nodes.clone();
            let folded: Vec<String> = words.iter().map(|w| singular(&w.text)).collect();
            for t in &schema.tables {
                let tw = name_words(&t.name);
                if let Some(i) = match_words(&folded, &tw) {
                    let q = index_of(&mut nodes, &words[i]);
                    edges.push(LinkEdge::QToTable { q, table: t.name.clone() });
                }
            }
            for c in &schema.columns {
                let cw = name_words(&c.name);
                if let Some(i) = match_words(&folded, &cw) {
                    let q = index_of(&mut nodes, &words[i]);
                    edges.push(LinkEdge::QToColumn { q, column: c.id() });
                }
            }
            schema.clone()
        }
    };

    for v in value_links {
        if pruned.column(&v.column.table, &v.column.column).is_none() {
            continue;
        }
        let q = index_of(&mut nodes, &v.span);
        edges.push(LinkEdge::ValueMatch {
            q,
            column: v.column.clone(),
            value: v.value.clone(),
        });
    }

    Ok(QuestionSchemaStructure {
        question: question.to_string(),
        question_nodes: nodes,
        schema: pruned,
        link_edges: edges,
    })
}

/// Exact match (single-word names) or word-subset match (multi-word names).
/// Returns the index of the first matching question word.
fn match_words(question: &[String], name: &[String]) -> Option<usize> {
    if name.is_empty() {
        return None;
    }
    let positions: Option<Vec<usize>> = name
        .iter()
        .map(|w| question.iter().position(|q| q == w))
        .collect();
    positions.and_then(|p| p.into_iter().min())
}
