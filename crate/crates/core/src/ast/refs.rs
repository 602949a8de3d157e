//! Schema reference traversal and scope bindings.

use serde::{Deserialize, Serialize};

use super::{NodeId, NodeKind, SqlAst};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RefKind {
    Table,
    Column,
    Literal,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PredicateContext {
    /// Resolved table of the compared column, when it could be resolved.
    pub table: Option<String>,
    pub column: String,
    pub op: String,
}

impl PredicateContext {
    pub fn column_display(&self) -> String {
        match &self.table {
            Some(t) => format!("{t}.{}", self.column),
            None => self.column.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SchemaReference {
    pub node_id: NodeId,
    pub kind: RefKind,
    pub name: String,
    /// Alias of a table, or the qualifier written before a column.
    pub qualifier: Option<String>,
    /// Table a column reference was resolved to through its query's FROM
    /// bindings. Unqualified columns resolve only when one table is in scope.
    pub resolved_table: Option<String>,
    pub predicate_context: Option<PredicateContext>,
}

/// One name visible in a query's FROM clause.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Binding {
    /// Alias if present, else the table name.
    pub name: String,
    /// Underlying table; `None` for derived tables.
    pub table: Option<String>,
    pub node: NodeId,
}

/// Sources bound by the FROM clause of a (non-compound) query node.
pub fn query_bindings(ast: &SqlAst, query: NodeId) -> Vec<Binding> {
    let mut out = Vec::new();
    let Some(from) = ast.child_of_kind(query, NodeKind::FromItem) else {
        return out;
    };
    for item in &ast.node(from).children {
        let src = match ast.node(*item).kind {
            NodeKind::Join => ast.node(*item).children[0],
            _ => *item,
        };
        let n = ast.node(src);
        let table = (n.kind == NodeKind::TableRef).then(|| n.attr("name").unwrap_or("").to_string());
        let name = n
            .attr("alias")
            .map(str::to_string)
            .or_else(|| table.clone())
            .unwrap_or_default();
        out.push(Binding {
            name,
            table,
            node: src,
        });
    }
    out
}

/// Resolve a column node to its table using the enclosing FROM scopes.
pub fn resolve_column_table(ast: &SqlAst, column: NodeId) -> Option<String> {
    let node = ast.node(column);
    let mut scopes = Vec::new();
    let mut cur = Some(column);
    while let Some(id) = cur {
        let n = ast.node(id);
        if n.kind == NodeKind::Query && n.attr("compound").is_none() {
            scopes.push(query_bindings(ast, id));
        }
        cur = n.parent;
    }
    resolve_in(&scopes, node.attr("table"))
}

fn resolve_in(scopes: &[Vec<Binding>], qualifier: Option<&str>) -> Option<String> {
    match qualifier {
        Some(q) => scopes
            .iter()
            .flat_map(|s| s.iter())
            .find(|b| b.name.eq_ignore_ascii_case(q))
            .and_then(|b| b.table.clone()),
        None => match scopes.first() {
            Some(s) if s.len() == 1 => s[0].table.clone(),
            _ => None,
        },
    }
}

/// Every table and column reference plus every literal operand of a
/// comparison, in pre-order, visiting each query's FROM clause before its
/// other clauses.
pub fn collect_schema_references(ast: &SqlAst) -> Vec<SchemaReference> {
    let mut out = Vec::new();
    let mut scopes: Vec<Vec<Binding>> = Vec::new();
    visit(ast, ast.root(), &mut scopes, &mut out);
    out
}

fn visit(ast: &SqlAst, id: NodeId, scopes: &mut Vec<Vec<Binding>>, out: &mut Vec<SchemaReference>) {
    let node = ast.node(id);
    match node.kind {
        NodeKind::Query if node.attr("compound").is_none() => {
            scopes.insert(0, query_bindings(ast, id));
            let from = ast.child_of_kind(id, NodeKind::FromItem);
            if let Some(f) = from {
                visit(ast, f, scopes, out);
            }
            for c in &node.children {
                if Some(*c) != from {
                    visit(ast, *c, scopes, out);
                }
            }
            scopes.remove(0);
            return;
        }
        NodeKind::TableRef => out.push(SchemaReference {
            node_id: id,
            kind: RefKind::Table,
            name: node.attr("name").unwrap_or("").to_string(),
            qualifier: node.attr("alias").map(str::to_string),
            resolved_table: node.attr("name").map(str::to_string),
            predicate_context: None,
        }),
        NodeKind::ColumnRef => out.push(SchemaReference {
            node_id: id,
            kind: RefKind::Column,
            name: node.attr("name").unwrap_or("").to_string(),
            qualifier: node.attr("table").map(str::to_string),
            resolved_table: resolve_in(scopes, node.attr("table")),
            predicate_context: None,
        }),
        NodeKind::Literal if parent_is_comparison(ast, id) => out.push(SchemaReference {
            node_id: id,
            kind: RefKind::Literal,
            name: node.attr("value").unwrap_or("").to_string(),
            qualifier: None,
            resolved_table: None,
            predicate_context: predicate_context(ast, id, scopes),
        }),
        _ => {}
    }
    for c in &node.children {
        visit(ast, *c, scopes, out);
    }
}

fn parent_is_comparison(ast: &SqlAst, id: NodeId) -> bool {
    ast.node(id)
        .parent
        .is_some_and(|p| ast.node(p).kind == NodeKind::Comparison)
}

fn predicate_context(ast: &SqlAst, lit: NodeId, scopes: &[Vec<Binding>]) -> Option<PredicateContext> {
    let parent = ast.node(lit).parent?;
    let cmp = ast.node(parent);
    if cmp.kind != NodeKind::Comparison {
        return None;
    }
    let col = cmp
        .children
        .iter()
        .map(|c| ast.node(*c))
        .find(|c| c.kind == NodeKind::ColumnRef && c.id != lit)?;
    Some(PredicateContext {
        table: resolve_in(scopes, col.attr("table")),
        column: col.attr("name").unwrap_or("").to_string(),
        op: cmp.attr("op").unwrap_or("").to_string(),
    })
}
