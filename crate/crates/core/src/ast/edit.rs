//! Copy-on-write editing of parsed trees.
//!
//! Edits never touch spans; an edited tree is rendered to text and reparsed
//! to obtain a fresh, aligned [`SqlAst`].

use std::collections::BTreeMap;

use super::{parse_sql, render, AstNode, Dialect, NodeId, NodeKind, ParseError, Span, SqlAst};

#[derive(Debug, Clone)]
pub struct AstEditor {
    ast: SqlAst,
}

impl AstEditor {
    pub fn new(ast: &SqlAst) -> Self {
        AstEditor { ast: ast.clone() }
    }

    pub fn node(&self, id: NodeId) -> &AstNode {
        self.ast.node(id)
    }

    pub fn tree(&self) -> &SqlAst {
        &self.ast
    }

    fn node_mut(&mut self, id: NodeId) -> &mut AstNode {
        &mut self.ast.nodes[id.0 as usize]
    }

    pub fn set_attr(&mut self, id: NodeId, key: &str, value: impl Into<String>) {
        self.node_mut(id).attrs.insert(key.to_string(), value.into());
    }

    pub fn remove_attr(&mut self, id: NodeId, key: &str) -> Option<String> {
        self.node_mut(id).attrs.remove(key)
    }

    /// Unlink a node from its parent. The node stays in the arena but is no
    /// longer reachable from the root.
    pub fn detach(&mut self, id: NodeId) {
        if let Some(p) = self.node(id).parent {
            self.node_mut(p).children.retain(|c| *c != id);
        }
    }

    /// Add a fresh leaf (or empty interior) node.
    pub fn insert_new(
        &mut self,
        parent: NodeId,
        index: usize,
        kind: NodeKind,
        attrs: &[(&str, &str)],
    ) -> NodeId {
        let id = NodeId(self.ast.nodes.len() as u32);
        self.ast.nodes.push(AstNode {
            id,
            kind,
            span: Span::new(0, 0),
            attrs: attrs
                .iter()
                .map(|(k, v)| (k.to_string(), v.to_string()))
                .collect::<BTreeMap<_, _>>(),
            parent: Some(parent),
            children: Vec::new(),
        });
        let children = &mut self.node_mut(parent).children;
        let index = index.min(children.len());
        children.insert(index, id);
        id
    }

    /// Copy the subtree `src_id` of `src` under `parent` at `index`.
    pub fn graft(&mut self, parent: NodeId, index: usize, src: &SqlAst, src_id: NodeId) -> NodeId {
        let id = self.copy_subtree(src, src_id, parent);
        let children = &mut self.node_mut(parent).children;
        let index = index.min(children.len());
        children.insert(index, id);
        id
    }

    /// Replace `target` by a copy of `src_id` from `src`, keeping position.
    pub fn replace(&mut self, target: NodeId, src: &SqlAst, src_id: NodeId) -> NodeId {
        let parent = self.node(target).parent.expect("cannot replace the root");
        let id = self.copy_subtree(src, src_id, parent);
        for c in self.node_mut(parent).children.iter_mut() {
            if *c == target {
                *c = id;
            }
        }
        id
    }

    /// Move an existing node under a new parent.
    pub fn reparent(&mut self, id: NodeId, parent: NodeId, index: usize) {
        self.detach(id);
        self.node_mut(id).parent = Some(parent);
        let children = &mut self.node_mut(parent).children;
        let index = index.min(children.len());
        children.insert(index, id);
    }

    fn copy_subtree(&mut self, src: &SqlAst, src_id: NodeId, parent: NodeId) -> NodeId {
        let id = NodeId(self.ast.nodes.len() as u32);
        let s = src.node(src_id);
        self.ast.nodes.push(AstNode {
            id,
            kind: s.kind,
            span: Span::new(0, 0),
            attrs: s.attrs.clone(),
            parent: Some(parent),
            children: Vec::new(),
        });
        let kids: Vec<NodeId> = s
            .children
            .iter()
            .map(|c| self.copy_subtree(src, *c, id))
            .collect();
        self.node_mut(id).children = kids;
        id
    }

    pub fn render(&self) -> String {
        render::render_node(&self.ast, self.ast.root)
    }

    /// Render and reparse.
    pub fn finish(&self) -> Result<SqlAst, ParseError> {
        parse_sql(&self.render(), self.ast.dialect)
    }
}

/// Parse a standalone expression. Returns the containing tree and the id of
/// the expression node within it.
pub fn parse_expression(text: &str) -> Result<(SqlAst, NodeId), ParseError> {
    let ast = parse_sql(&format!("SELECT {text}"), Dialect::Sqlite)?;
    let select = ast.node(ast.root()).children[0];
    let items = &ast.node(select).children;
    if items.len() != 1 {
        return Err(ParseError::new(0, "expected a single expression"));
    }
    let id = items[0];
    Ok((ast, id))
}
