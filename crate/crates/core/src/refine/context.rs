//! Per-error refinement context: AST fragment, schema neighbourhood,
//! guideline and demonstrations.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::ast::{AstFragment, SqlAst};
use crate::schema::{ColumnId, LinkEdge, QuestionSchemaStructure, SchemaGraph, SchemaNode};
use crate::taxonomy::{priority, ErrorType, FilledGuideline};

use super::localize::Localization;

pub const DEFAULT_FEW_SHOT: usize = 2;
pub const FEWSHOT_JSON: &str = include_str!("../../resources/fewshot.json");

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Example {
    pub error_type: ErrorType,
    pub db_id: String,
    pub erroneous_sql: String,
    pub corrected_sql: String,
    pub rationale: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExampleStore {
    pub version: u32,
    pub examples: Vec<Example>,
}

impl ExampleStore {
    /// The demonstrations shipped with the crate.
    pub fn builtin() -> Self {
        serde_json::from_str(FEWSHOT_JSON).expect("embedded few-shot store is valid")
    }

    pub fn load(path: &Path) -> Result<Self, std::io::Error> {
        let text = std::fs::read_to_string(path)?;
        serde_json::from_str(&text).map_err(std::io::Error::other)
    }

    /// First `k` demonstrations of a type, in store order.
    pub fn top_k(&self, error_type: ErrorType, k: usize) -> Vec<Example> {
        self.examples
            .iter()
            .filter(|e| e.error_type == error_type)
            .take(k)
            .cloned()
            .collect()
    }
}

/// Schema elements of one error closed under one hop of key edges.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SchemaSubgraph {
    pub graph: SchemaGraph,
    pub links: Vec<LinkEdge>,
}

impl SchemaSubgraph {
    pub fn render(&self, qss: &QuestionSchemaStructure) -> String {
        let g = &self.graph;
        let mut out = String::new();
        for t in &g.tables {
            let cols: Vec<String> = g
                .columns_of(&t.name)
                .into_iter()
                .map(|c| {
                    let pk = if c.primary_key { " PK" } else { "" };
                    format!("{} {}{pk}", c.name, c.declared_type)
                })
                .collect();
            out.push_str(&format!("{}({})\n", t.name, cols.join(", ")));
        }
        for (a, b) in g.foreign_keys() {
            out.push_str(&format!("{a} -> {b}\n"));
        }
        for l in &self.links {
            let word = qss
                .question_nodes
                .get(l.question_index())
                .map(|n| n.text.as_str())
                .unwrap_or("");
            let target = l.column().map(ColumnId::to_string).unwrap_or_else(|| l.table().to_string());
            out.push_str(&format!("{word:?} ~ {target}\n"));
        }
        out
    }
}

/// Closure of `elements` under primary keys and foreign keys touching their
/// tables, plus the question links landing inside it.
pub fn schema_subgraph(schema: &SchemaGraph, qss: &QuestionSchemaStructure, elements: &[SchemaNode]) -> SchemaSubgraph {
    let mut tables: Vec<String> = Vec::new();
    let mut columns: Vec<ColumnId> = Vec::new();
    let add_table = |tables: &mut Vec<String>, t: &str| {
        if !tables.iter().any(|x| x == t) {
            tables.push(t.to_string());
        }
    };
    for e in elements {
        add_table(&mut tables, e.table_name());
        if let SchemaNode::Column { table, column } = e {
            columns.push(ColumnId::new(table, column));
        }
    }
    let seeds = tables.clone();
    for (a, b) in schema.foreign_keys() {
        if seeds.contains(&a.table) || seeds.contains(&b.table) {
            add_table(&mut tables, &a.table);
            add_table(&mut tables, &b.table);
            columns.push(a);
            columns.push(b);
        }
    }
    for t in &tables.clone() {
        columns.extend(schema.primary_keys(t).into_iter().map(|c| c.id()));
    }
    let graph = schema.project(&tables, &columns);
    let links = qss
        .link_edges
        .iter()
        .filter(|l| match l.column() {
            Some(c) => graph.column(&c.table, &c.column).is_some(),
            None => graph.has_table(l.table()),
        })
        .cloned()
        .collect();
    SchemaSubgraph { graph, links }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContextEntry {
    pub error_type: ErrorType,
    pub priority: u32,
    pub fragment: AstFragment,
    /// SQL text of the fragment; the whole statement when it is empty.
    pub fragment_sql: String,
    pub subgraph: SchemaSubgraph,
    pub guideline: FilledGuideline,
    pub examples: Vec<Example>,
}

/// Build the context of one localized error. `ast` is `None` for SQL that
/// did not parse.
pub fn extract_context(
    original_sql: &str,
    ast: Option<&SqlAst>,
    schema: &SchemaGraph,
    qss: &QuestionSchemaStructure,
    loc: &Localization,
    store: &ExampleStore,
    k: usize,
) -> ContextEntry {
    let fragment = match ast {
        Some(a) => a.minimal_enclosing_subtree(&loc.error_nodes).unwrap_or_default(),
        None => AstFragment::default(),
    };
    let fragment_sql = match (ast, fragment.is_empty()) {
        (Some(a), false) => fragment.render(a),
        _ => original_sql.to_string(),
    };
    ContextEntry {
        error_type: loc.error_type,
        priority: priority(loc.error_type),
        fragment,
        fragment_sql,
        subgraph: schema_subgraph(schema, qss, &loc.schema_elements),
        guideline: loc.guideline.clone(),
        examples: store.top_k(loc.error_type, k),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RefinementContext {
    pub question: String,
    pub entries: Vec<ContextEntry>,
}

impl RefinementContext {
    /// Entries are kept sorted by priority (stable for equal keys).
    pub fn new(question: impl Into<String>, mut entries: Vec<ContextEntry>) -> Self {
        entries.sort_by_key(|e| e.priority);
        RefinementContext {
            question: question.into(),
            entries,
        }
    }

    pub fn is_sorted(&self) -> bool {
        self.entries.windows(2).all(|w| w[0].priority <= w[1].priority)
    }
}
