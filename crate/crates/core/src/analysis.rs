//! Schema-aware resolution of column and table references.

use std::collections::BTreeSet;

use crate::ast::{query_bindings, Binding, NodeId, NodeKind, SqlAst};
use crate::schema::{ColumnId, SchemaGraph};

/// FROM bindings of one non-compound query.
#[derive(Debug, Clone)]
pub struct Scope {
    pub query: NodeId,
    pub bindings: Vec<Binding>,
}

/// Scopes visible from `id`, innermost first.
pub fn scopes_of(ast: &SqlAst, id: NodeId) -> Vec<Scope> {
    let mut out = Vec::new();
    let mut cur = Some(id);
    while let Some(n) = cur {
        let node = ast.node(n);
        if node.kind == NodeKind::Query && node.attr("compound").is_none() {
            out.push(Scope {
                query: n,
                bindings: query_bindings(ast, n),
            });
        }
        cur = node.parent;
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Resolution {
    /// Bound to exactly one FROM source.
    Bound { query: NodeId, binding: usize, table: Option<String> },
    /// Several sources of the same scope could supply the column.
    Ambiguous { query: NodeId, bindings: Vec<usize> },
    Unresolved,
}

impl Resolution {
    pub fn table(&self) -> Option<&str> {
        match self {
            Resolution::Bound { table, .. } => table.as_deref(),
            _ => None,
        }
    }
}

/// Resolve a column reference against FROM scopes and the schema.
pub fn resolve_column(ast: &SqlAst, schema: &SchemaGraph, col: NodeId) -> Resolution {
    let node = ast.node(col);
    let name = node.attr("name").unwrap_or("");
    let scopes = scopes_of(ast, col);
    if let Some(q) = node.attr("table") {
        for s in &scopes {
            if let Some(i) = s.bindings.iter().position(|b| b.name.eq_ignore_ascii_case(q)) {
                return Resolution::Bound {
                    query: s.query,
                    binding: i,
                    table: s.bindings[i].table.as_ref().and_then(|t| schema.canonical_table(t)).map(str::to_string),
                };
            }
        }
        return Resolution::Unresolved;
    }
    for s in &scopes {
        let hits: Vec<usize> = s
            .bindings
            .iter()
            .enumerate()
            .filter(|(_, b)| match &b.table {
                Some(t) => schema.column(t, name).is_some(),
                None => derived_has_column(ast, b.node, name),
            })
            .map(|(i, _)| i)
            .collect();
        match hits.len() {
            0 => continue,
            1 => {
                let b = &s.bindings[hits[0]];
                return Resolution::Bound {
                    query: s.query,
                    binding: hits[0],
                    table: b.table.as_ref().and_then(|t| schema.canonical_table(t)).map(str::to_string),
                };
            }
            _ => {
                return Resolution::Ambiguous {
                    query: s.query,
                    bindings: hits,
                }
            }
        }
    }
    Resolution::Unresolved
}

/// Whether a derived table (subquery source) outputs a column of this name.
fn derived_has_column(ast: &SqlAst, sub: NodeId, name: &str) -> bool {
    let Some(q) = ast.node(sub).children.first() else {
        return false;
    };
    let mut q = *q;
    while ast.node(q).attr("compound").is_some() {
        match ast.node(q).children.first() {
            Some(c) => q = *c,
            None => return false,
        }
    }
    let Some(sel) = ast.child_of_kind(q, NodeKind::SelectClause) else {
        return false;
    };
    ast.node(sel).children.iter().any(|item| {
        let n = ast.node(*item);
        n.kind == NodeKind::Star
            || n.attr("alias").is_some_and(|a| a.eq_ignore_ascii_case(name))
            || (n.kind == NodeKind::ColumnRef && n.attr("name").is_some_and(|a| a.eq_ignore_ascii_case(name)))
    })
}

/// Schema column a reference resolves to, with canonical spelling.
pub fn resolve_schema_column(ast: &SqlAst, schema: &SchemaGraph, col: NodeId) -> Option<ColumnId> {
    let table = resolve_column(ast, schema, col).table()?.to_string();
    let c = schema.column(&table, ast.node(col).attr("name")?)?;
    Some(ColumnId::new(c.table.clone(), c.name.clone()))
}

/// FROM sources of `query` that are table references no column, star or
/// join condition of the query (or its nested queries) refers to. Only
/// reported when the query has at least two sources.
pub fn unreferenced_tables(ast: &SqlAst, schema: &SchemaGraph, query: NodeId) -> Vec<usize> {
    let bindings = query_bindings(ast, query);
    if bindings.len() < 2 {
        return Vec::new();
    }
    let mut used: BTreeSet<usize> = BTreeSet::new();
    for id in ast.descendants(query) {
        let n = ast.node(id);
        match n.kind {
            NodeKind::ColumnRef => match resolve_column(ast, schema, id) {
                Resolution::Bound { query: q, binding, .. } if q == query => {
                    used.insert(binding);
                }
                Resolution::Ambiguous { query: q, bindings } if q == query => used.extend(bindings),
                _ => {}
            },
            NodeKind::Star if in_select_list(ast, id) && ast.enclosing_query(id) == query => match n.attr("table") {
                Some(t) => used.extend(bindings.iter().position(|b| b.name.eq_ignore_ascii_case(t))),
                None => used.extend(0..bindings.len()),
            },
            _ => {}
        }
    }
    (0..bindings.len())
        .filter(|i| !used.contains(i) && bindings[*i].table.is_some())
        .collect()
}

fn in_select_list(ast: &SqlAst, id: NodeId) -> bool {
    ast.node(id)
        .parent
        .is_some_and(|p| ast.node(p).kind == NodeKind::SelectClause)
}

/// Declared-type affinity class, following SQLite's rules.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Affinity {
    Integer,
    Text,
    Blob,
    Real,
    Numeric,
}

pub fn affinity(declared: &str) -> Affinity {
    let t = declared.to_ascii_uppercase();
    if t.contains("INT") {
        Affinity::Integer
    } else if t.contains("CHAR") || t.contains("CLOB") || t.contains("TEXT") {
        Affinity::Text
    } else if t.contains("BLOB") || t.is_empty() {
        Affinity::Blob
    } else if t.contains("REAL") || t.contains("FLOA") || t.contains("DOUB") {
        Affinity::Real
    } else {
        Affinity::Numeric
    }
}
