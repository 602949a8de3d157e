//! SQL abstract syntax trees with token-span alignment.
//!
//! Every [`AstNode`] carries an inclusive `(start, end)` span over
//! [`SqlAst::source_tokens`], so a node located in the tree can always be
//! mapped back to the exact tokens of the query text it came from.

mod edit;
mod lexer;
mod parser;
mod refs;
mod render;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use edit::{parse_expression, AstEditor};
pub use lexer::{quote_ident, quote_string, tokenize, unquote_ident, Token, TokenKind};
pub use parser::is_reserved;
pub use refs::{
    collect_schema_references, query_bindings, resolve_column_table, Binding, PredicateContext,
    RefKind, SchemaReference,
};

#[derive(Debug, Clone, PartialEq, Eq, Error, Serialize, Deserialize)]
#[error("parse error at token {position}: {message}")]
pub struct ParseError {
    /// Index into the token stream of the offending token (equal to the
    /// token count when input ended early).
    pub position: usize,
    pub message: String,
}

impl ParseError {
    pub fn new(position: usize, message: impl Into<String>) -> Self {
        ParseError {
            position,
            message: message.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AstError {
    #[error("unknown node id {0}")]
    UnknownNode(NodeId),
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Dialect {
    #[default]
    Sqlite,
}

impl FromStr for Dialect {
    type Err = ParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "sqlite" => Ok(Dialect::Sqlite),
            other => Err(ParseError::new(0, format!("unsupported dialect: {other}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct NodeId(pub u32);

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "n{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NodeKind {
    /// A full SELECT statement, a compound statement, or one member of a
    /// compound statement.
    Query,
    SelectClause,
    /// The FROM clause.
    FromItem,
    Join,
    WhereClause,
    GroupBy,
    Having,
    OrderBy,
    Limit,
    /// EXISTS tests.
    Predicate,
    Comparison,
    LogicalOp,
    /// Binary arithmetic, concatenation and unary sign operators.
    Arithmetic,
    /// Named functions, aggregates, CAST and CASE.
    FunctionCall,
    ColumnRef,
    TableRef,
    Literal,
    /// DISTINCT / ALL / ASC / DESC.
    Modifier,
    Subquery,
    Star,
}

impl NodeKind {
    pub fn as_str(self) -> &'static str {
        match self {
            NodeKind::Query => "query",
            NodeKind::SelectClause => "select_clause",
            NodeKind::FromItem => "from_item",
            NodeKind::Join => "join",
            NodeKind::WhereClause => "where_clause",
            NodeKind::GroupBy => "group_by",
            NodeKind::Having => "having",
            NodeKind::OrderBy => "order_by",
            NodeKind::Limit => "limit",
            NodeKind::Predicate => "predicate",
            NodeKind::Comparison => "comparison",
            NodeKind::LogicalOp => "logical_op",
            NodeKind::Arithmetic => "arithmetic",
            NodeKind::FunctionCall => "function_call",
            NodeKind::ColumnRef => "column_ref",
            NodeKind::TableRef => "table_ref",
            NodeKind::Literal => "literal",
            NodeKind::Modifier => "modifier",
            NodeKind::Subquery => "subquery",
            NodeKind::Star => "star",
        }
    }

    /// Clause kinds bound the upward extension of enclosing subtrees.
    pub fn is_clause(self) -> bool {
        matches!(
            self,
            NodeKind::SelectClause
                | NodeKind::FromItem
                | NodeKind::WhereClause
                | NodeKind::GroupBy
                | NodeKind::Having
                | NodeKind::OrderBy
                | NodeKind::Limit
        )
    }

    pub fn is_expression(self) -> bool {
        matches!(
            self,
            NodeKind::Predicate
                | NodeKind::Comparison
                | NodeKind::LogicalOp
                | NodeKind::Arithmetic
                | NodeKind::FunctionCall
                | NodeKind::ColumnRef
                | NodeKind::Literal
                | NodeKind::Subquery
                | NodeKind::Star
        )
    }
}

impl fmt::Display for NodeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Inclusive token index range.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Span {
    pub start: usize,
    pub end: usize,
}

impl Span {
    pub fn new(start: usize, end: usize) -> Self {
        Span { start, end }
    }

    pub fn contains(&self, other: &Span) -> bool {
        self.start <= other.start && other.end <= self.end
    }

    pub fn overlaps(&self, other: &Span) -> bool {
        self.start <= other.end && other.start <= self.end
    }

    pub fn len(&self) -> usize {
        self.end - self.start + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AstNode {
    pub id: NodeId,
    pub kind: NodeKind,
    pub span: Span,
    pub attrs: BTreeMap<String, String>,
    pub parent: Option<NodeId>,
    pub children: Vec<NodeId>,
}

impl AstNode {
    pub fn attr(&self, key: &str) -> Option<&str> {
        self.attrs.get(key).map(String::as_str)
    }
}

/// A parsed query. Immutable once built; node ids are assigned in pre-order
/// so identical text always yields identical ids.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SqlAst {
    nodes: Vec<AstNode>,
    root: NodeId,
    source_tokens: Vec<Token>,
    dialect: Dialect,
}

/// Parse a single SELECT statement.
pub fn parse_sql(text: &str, dialect: Dialect) -> Result<SqlAst, ParseError> {
    parser::parse(text, dialect)
}

/// Render an AST back to SQL text with normalized whitespace and upper-case
/// keywords.
pub fn flatten_ast(ast: &SqlAst) -> String {
    render::render_node(ast, ast.root)
}

impl SqlAst {
    pub(crate) fn from_parts(
        nodes: Vec<AstNode>,
        root: NodeId,
        source_tokens: Vec<Token>,
        dialect: Dialect,
    ) -> Self {
        SqlAst {
            nodes,
            root,
            source_tokens,
            dialect,
        }
    }

    pub fn root(&self) -> NodeId {
        self.root
    }

    pub fn dialect(&self) -> Dialect {
        self.dialect
    }

    pub fn nodes(&self) -> &[AstNode] {
        &self.nodes
    }

    pub fn source_tokens(&self) -> &[Token] {
        &self.source_tokens
    }

    pub fn node(&self, id: NodeId) -> &AstNode {
        &self.nodes[id.0 as usize]
    }

    pub fn get(&self, id: NodeId) -> Option<&AstNode> {
        self.nodes.get(id.0 as usize)
    }

    pub fn children(&self, id: NodeId) -> impl Iterator<Item = &AstNode> {
        self.node(id).children.iter().map(move |c| self.node(*c))
    }

    /// Parent-to-child edges in pre-order.
    pub fn edges(&self) -> impl Iterator<Item = (NodeId, NodeId)> + '_ {
        self.nodes
            .iter()
            .flat_map(|n| n.children.iter().map(move |c| (n.id, *c)))
    }

    /// The tokens covered by a node, joined with single spaces.
    pub fn span_text(&self, id: NodeId) -> String {
        let span = self.node(id).span;
        self.source_tokens[span.start..=span.end]
            .iter()
            .map(|t| t.text.as_str())
            .collect::<Vec<_>>()
            .join(" ")
    }

    /// Render one node (and its subtree) as SQL.
    pub fn render(&self, id: NodeId) -> String {
        render::render_node(self, id)
    }

    /// Pre-order list of the subtree rooted at `id`.
    pub fn descendants(&self, id: NodeId) -> Vec<NodeId> {
        let mut out = Vec::new();
        let mut stack = vec![id];
        while let Some(n) = stack.pop() {
            out.push(n);
            for c in self.node(n).children.iter().rev() {
                stack.push(*c);
            }
        }
        out
    }

    /// Ancestors from the parent upward to the root.
    pub fn ancestors(&self, id: NodeId) -> Vec<NodeId> {
        let mut out = Vec::new();
        let mut cur = self.node(id).parent;
        while let Some(p) = cur {
            out.push(p);
            cur = self.node(p).parent;
        }
        out
    }

    pub fn find_all(&self, kind: NodeKind) -> Vec<NodeId> {
        self.nodes
            .iter()
            .filter(|n| n.kind == kind)
            .map(|n| n.id)
            .collect()
    }

    /// Nearest enclosing `query` node (the node itself if it is one).
    pub fn enclosing_query(&self, id: NodeId) -> NodeId {
        let mut cur = id;
        loop {
            let node = self.node(cur);
            if node.kind == NodeKind::Query && node.attr("compound").is_none() {
                return cur;
            }
            match node.parent {
                Some(p) => cur = p,
                None => return cur,
            }
        }
    }

    /// Direct child of `parent` with the given kind.
    pub fn child_of_kind(&self, parent: NodeId, kind: NodeKind) -> Option<NodeId> {
        self.node(parent)
            .children
            .iter()
            .copied()
            .find(|c| self.node(*c).kind == kind)
    }

    /// Deep comparison of kinds, attributes and child order, ignoring spans
    /// and token text.
    pub fn structurally_equal(&self, other: &SqlAst) -> bool {
        fn eq(a: &SqlAst, an: NodeId, b: &SqlAst, bn: NodeId) -> bool {
            let (x, y) = (a.node(an), b.node(bn));
            x.kind == y.kind
                && x.attrs == y.attrs
                && x.children.len() == y.children.len()
                && x
                    .children
                    .iter()
                    .zip(&y.children)
                    .all(|(c, d)| eq(a, *c, b, *d))
        }
        eq(self, self.root, other, other.root)
    }

    /// Indented one-node-per-line rendering used in model prompts.
    pub fn to_indented_tree(&self) -> String {
        self.indented_subtree(self.root)
    }

    pub fn indented_subtree(&self, root: NodeId) -> String {
        let mut out = String::new();
        let base = self.ancestors(root).len();
        for id in self.descendants(root) {
            let node = self.node(id);
            let depth = self.ancestors(id).len() - base;
            out.push_str(&"  ".repeat(depth));
            out.push_str(node.kind.as_str());
            for (k, v) in &node.attrs {
                out.push_str(&format!(" {k}={v:?}"));
            }
            out.push_str(&format!(" [{}..{}]\n", node.span.start, node.span.end));
        }
        out
    }

    /// Smallest subtree containing all `ids`, widened to the nearest clause
    /// ancestor. An empty request yields an empty fragment.
    pub fn minimal_enclosing_subtree(
        &self,
        ids: &BTreeSet<NodeId>,
    ) -> Result<AstFragment, AstError> {
        for id in ids {
            if self.get(*id).is_none() {
                return Err(AstError::UnknownNode(*id));
            }
        }
        let Some(first) = ids.iter().next() else {
            return Ok(AstFragment::default());
        };

        // Lowest common ancestor: intersect root-ward paths.
        let path = |id: NodeId| {
            let mut p = vec![id];
            p.extend(self.ancestors(id));
            p.reverse();
            p
        };
        let mut lca_path = path(*first);
        for id in ids.iter().skip(1) {
            let other = path(*id);
            let common = lca_path
                .iter()
                .zip(&other)
                .take_while(|(a, b)| a == b)
                .count();
            lca_path.truncate(common);
        }
        let mut top = *lca_path.last().expect("all nodes share the root");
        while !self.node(top).kind.is_clause() {
            match self.node(top).parent {
                Some(p) => top = p,
                None => break,
            }
        }
        Ok(AstFragment {
            root: Some(top),
            nodes: self.descendants(top),
        })
    }
}

/// A subtree of some [`SqlAst`], identified by node ids with original spans.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AstFragment {
    pub root: Option<NodeId>,
    /// Pre-order node ids of the fragment.
    pub nodes: Vec<NodeId>,
}

impl AstFragment {
    pub fn is_empty(&self) -> bool {
        self.root.is_none()
    }

    pub fn render(&self, ast: &SqlAst) -> String {
        self.root.map(|r| ast.render(r)).unwrap_or_default()
    }

    pub fn span(&self, ast: &SqlAst) -> Option<Span> {
        self.root.map(|r| ast.node(r).span)
    }
}

#[cfg(test)]
mod tests;
