//! Static detection rules, each the inversion of a perturbation operator.

use rusqlite::Connection;

use crate::analysis::{affinity, resolve_schema_column, unreferenced_tables, Affinity};
use crate::ast::{NodeId, NodeKind, SqlAst};
use crate::exec::ExecOutcome;
use crate::schema::{lookup_values, ColumnId, SchemaGraph, DEFAULT_LOOKUP_LIMIT};
use crate::taxonomy::{ErrorLabelSet, ErrorType};
use crate::value::Value;

/// A literal compared for equality or membership against a schema column.
#[derive(Debug, Clone, PartialEq)]
pub struct ValueSite {
    pub literal: NodeId,
    pub comparison: NodeId,
    pub column: ColumnId,
    pub value: Value,
}

const VALUE_OPS: &[&str] = &["=", "==", "IN"];

/// Typed value of a string or numeric literal node.
pub fn literal_value(ast: &SqlAst, lit: NodeId) -> Option<Value> {
    let n = ast.node(lit);
    let raw = n.attr("value")?;
    match n.attr("type")? {
        "string" => Some(Value::Text(raw.to_string())),
        "number" => raw
            .parse::<i64>()
            .map(Value::Integer)
            .or_else(|_| raw.parse::<f64>().map(Value::Real))
            .ok(),
        _ => None,
    }
}

pub fn value_sites(ast: &SqlAst, schema: &SchemaGraph) -> Vec<ValueSite> {
    let mut out = Vec::new();
    for cmp in ast.find_all(NodeKind::Comparison) {
        let n = ast.node(cmp);
        if !n.attr("op").is_some_and(|op| VALUE_OPS.contains(&op)) || n.attr("collate").is_some() {
            continue;
        }
        let ch = &n.children;
        let pairs: Vec<(NodeId, NodeId)> = if n.attr("op") == Some("IN") {
            if n.attr("in_list").is_none() {
                continue;
            }
            ch[1..].iter().map(|l| (ch[0], *l)).collect()
        } else {
            vec![(ch[0], ch[1]), (ch[1], ch[0])]
        };
        for (col, lit) in pairs {
            let (c, l) = (ast.node(col), ast.node(lit));
            if c.kind != NodeKind::ColumnRef || l.kind != NodeKind::Literal || l.attr("collate").is_some() {
                continue;
            }
            let (Some(column), Some(value)) = (resolve_schema_column(ast, schema, col), literal_value(ast, lit))
            else {
                continue;
            };
            out.push(ValueSite {
                literal: lit,
                comparison: cmp,
                column,
                value,
            });
        }
    }
    out
}

/// Apply the column's type affinity to a compared literal.
pub fn coerce(value: &Value, aff: Affinity) -> Value {
    match (value, aff) {
        (Value::Text(s), Affinity::Integer | Affinity::Real | Affinity::Numeric) => {
            let t = s.trim();
            if let Ok(i) = t.parse::<i64>() {
                Value::Integer(i)
            } else if let Ok(f) = t.parse::<f64>() {
                Value::Real(f)
            } else {
                value.clone()
            }
        }
        (Value::Integer(_) | Value::Real(_), Affinity::Text) => Value::Text(value.to_string()),
        _ => value.clone(),
    }
}

/// Whether `value` would match some stored value of a column with the
/// given declared type.
pub fn in_domain(value: &Value, declared_type: &str, domain: &[Value]) -> bool {
    let v = coerce(value, affinity(declared_type));
    domain.iter().any(|d| d.approx_eq(&v, 0.0))
}

fn value_error(ast: &SqlAst, schema: &SchemaGraph, conn: &Connection) -> bool {
    value_sites(ast, schema).iter().any(|s| {
        let Some(col) = schema.column(&s.column.table, &s.column.column) else {
            return false;
        };
        match lookup_values(&s.column, conn, DEFAULT_LOOKUP_LIMIT) {
            Ok(vs) if vs.is_assertable() => !in_domain(&s.value, &col.declared_type, &vs.values),
            _ => false,
        }
    })
}

fn table_mismatch(ast: &SqlAst, schema: &SchemaGraph) -> bool {
    ast.find_all(NodeKind::TableRef)
        .into_iter()
        .any(|t| !schema.has_table(ast.node(t).attr("name").unwrap_or("")))
}

fn table_redundancy(ast: &SqlAst, schema: &SchemaGraph) -> bool {
    ast.find_all(NodeKind::Query)
        .into_iter()
        .filter(|q| ast.node(*q).attr("compound").is_none())
        .any(|q| !unreferenced_tables(ast, schema, q).is_empty())
}

/// Label for an engine error message, if one applies.
pub fn exec_failure_label(message: &str) -> Option<ErrorType> {
    let m = message.to_ascii_lowercase();
    if m.contains("no such table") {
        Some(ErrorType::TableMismatch)
    } else if m.contains("no such column") || m.contains("ambiguous column") {
        Some(ErrorType::AttributeMismatch)
    } else if m.contains("misuse of aggregate")
        || m.contains("no such function")
        || m.contains("wrong number of arguments")
    {
        Some(ErrorType::FunctionError)
    } else if m.contains("group by") || m.contains("syntax error") || m.contains("incomplete input") {
        Some(ErrorType::ClauseError)
    } else {
        None
    }
}

/// Run every static rule. `ast` is `None` when the SQL failed to parse; a
/// missing connection makes value lookups non-assertable.
pub fn static_detect(
    ast: Option<&SqlAst>,
    schema: &SchemaGraph,
    conn: Option<&Connection>,
    feedback: &ExecOutcome,
) -> ErrorLabelSet {
    let mut labels = Vec::new();
    if let ExecOutcome::Error { message, .. } = feedback {
        labels.extend(exec_failure_label(message));
    }
    if let Some(ast) = ast {
        if table_mismatch(ast, schema) {
            labels.push(ErrorType::TableMismatch);
        }
        if table_redundancy(ast, schema) {
            labels.push(ErrorType::TableRedundancy);
        }
        if conn.is_some_and(|c| value_error(ast, schema, c)) {
            labels.push(ErrorType::ValueError);
        }
    }
    ErrorLabelSet::from_labels(labels)
}
