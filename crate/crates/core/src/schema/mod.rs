//! Schema graphs, value linking and the question-schema structure.

mod graph;
mod link;
mod mschema;

pub use graph::{
    introspect_schema, lookup_values, open_readonly, Column, ColumnId, EdgeKind, SchemaEdge,
    SchemaGraph, SchemaNode, Table, ValueSet, DEFAULT_EXAMPLE_COUNT, DEFAULT_LOOKUP_LIMIT,
};
pub use link::{
    build_qss, fuzzy_ratio, link_values, question_words, LinkEdge, QuestionNode, QuestionSchemaStructure,
    SchemaLinkingResult, SpanAssignment, ValueMatch, DEFAULT_LINK_THRESHOLD, MAX_SPAN_WORDS,
};
pub use mschema::serialize_mschema;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum SchemaError {
    #[error("i/o error: {0}")]
    Io(String),
    #[error("corrupt database: {0}")]
    CorruptDatabase(String),
    #[error("unknown column {0}")]
    UnknownColumn(String),
    #[error("unresolved link target {0}")]
    UnresolvedLinkTarget(String),
}
