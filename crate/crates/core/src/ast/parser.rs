//! Recursive-descent parser for SELECT statements.

use std::collections::BTreeMap;

use super::lexer::{tokenize, unquote_string, Token, TokenKind};
use super::{AstNode, Dialect, NodeId, NodeKind, ParseError, Span, SqlAst};

const RESERVED: &[&str] = &[
    "ALL", "AND", "AS", "ASC", "BETWEEN", "BY", "CASE", "CAST", "COLLATE", "CROSS", "DESC",
    "DISTINCT", "ELSE", "END", "ESCAPE", "EXCEPT", "EXISTS", "FROM", "FULL", "GLOB", "GROUP",
    "HAVING", "IN", "INNER", "INTERSECT", "IS", "JOIN", "LEFT", "LIKE", "LIMIT", "NATURAL", "NOT",
    "NULL", "OFFSET", "ON", "OR", "ORDER", "OUTER", "RIGHT", "SELECT", "THEN", "UNION", "USING",
    "VALUES", "WHEN", "WHERE", "WITH",
];

const LITERAL_KEYWORDS: &[&str] = &[
    "TRUE",
    "FALSE",
    "CURRENT_DATE",
    "CURRENT_TIME",
    "CURRENT_TIMESTAMP",
];

pub fn is_reserved(word: &str) -> bool {
    RESERVED.iter().any(|r| r.eq_ignore_ascii_case(word))
}

#[derive(Debug, Clone)]
pub(crate) struct Draft {
    kind: NodeKind,
    span: Span,
    attrs: BTreeMap<String, String>,
    children: Vec<Draft>,
}

impl Draft {
    fn new(kind: NodeKind, start: usize, end: usize) -> Self {
        Draft {
            kind,
            span: Span::new(start, end),
            attrs: BTreeMap::new(),
            children: Vec::new(),
        }
    }

    fn with(mut self, key: &str, value: impl Into<String>) -> Self {
        self.attrs.insert(key.to_string(), value.into());
        self
    }

    fn set(&mut self, key: &str, value: impl Into<String>) {
        self.attrs.insert(key.to_string(), value.into());
    }

    fn child(mut self, c: Draft) -> Self {
        self.children.push(c);
        self
    }
}

pub fn parse(text: &str, dialect: Dialect) -> Result<SqlAst, ParseError> {
    let tokens = tokenize(text)?;
    if tokens.is_empty() {
        return Err(ParseError::new(0, "empty input"));
    }
    let mut p = Parser {
        toks: &tokens,
        pos: 0,
    };
    let mut root = p.parse_query()?;
    if p.peek_sym(";") {
        root.set("terminator", ";");
        root.span.end = p.pos;
        p.pos += 1;
    }
    if p.pos < tokens.len() {
        return Err(p.err(format!("unexpected token {:?}", tokens[p.pos].text)));
    }
    let mut nodes = Vec::new();
    let root_id = arena(root, None, &mut nodes);
    Ok(SqlAst::from_parts(nodes, root_id, tokens, dialect))
}

fn arena(draft: Draft, parent: Option<NodeId>, out: &mut Vec<AstNode>) -> NodeId {
    let id = NodeId(out.len() as u32);
    out.push(AstNode {
        id,
        kind: draft.kind,
        span: draft.span,
        attrs: draft.attrs,
        parent,
        children: Vec::new(),
    });
    let children: Vec<NodeId> = draft
        .children
        .into_iter()
        .map(|c| arena(c, Some(id), out))
        .collect();
    out[id.0 as usize].children = children;
    id
}

struct Parser<'a> {
    toks: &'a [Token],
    pos: usize,
}

fn quote_style(tok: &Token) -> Option<&'static str> {
    if tok.kind != TokenKind::QuotedIdent {
        return None;
    }
    match tok.text.chars().next() {
        Some('"') => Some("\""),
        Some('`') => Some("`"),
        Some('[') => Some("["),
        _ => None,
    }
}

impl<'a> Parser<'a> {
    fn err(&self, msg: impl Into<String>) -> ParseError {
        ParseError::new(self.pos, msg)
    }

    fn peek(&self) -> Option<&'a Token> {
        self.toks.get(self.pos)
    }

    fn peek_at(&self, n: usize) -> Option<&'a Token> {
        self.toks.get(self.pos + n)
    }

    fn peek_kw(&self, kw: &str) -> bool {
        self.peek().is_some_and(|t| t.is_keyword(kw))
    }

    fn peek_kw_at(&self, n: usize, kw: &str) -> bool {
        self.peek_at(n).is_some_and(|t| t.is_keyword(kw))
    }

    fn peek_sym(&self, sym: &str) -> bool {
        self.peek().is_some_and(|t| t.is_symbol(sym))
    }

    fn eat_kw(&mut self, kw: &str) -> bool {
        if self.peek_kw(kw) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn eat_sym(&mut self, sym: &str) -> bool {
        if self.peek_sym(sym) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect_kw(&mut self, kw: &str) -> Result<usize, ParseError> {
        if self.eat_kw(kw) {
            Ok(self.pos - 1)
        } else {
            Err(self.err(format!("expected {kw}")))
        }
    }

    fn expect_sym(&mut self, sym: &str) -> Result<usize, ParseError> {
        if self.eat_sym(sym) {
            Ok(self.pos - 1)
        } else {
            Err(self.err(format!("expected '{sym}'")))
        }
    }

    /// A token usable as a bare identifier.
    fn is_ident(tok: &Token) -> bool {
        match tok.kind {
            TokenKind::QuotedIdent => true,
            TokenKind::Word => !is_reserved(&tok.text),
            _ => false,
        }
    }

    fn peek_ident(&self) -> bool {
        self.peek().is_some_and(Self::is_ident)
    }

    fn expect_ident(&mut self) -> Result<&'a Token, ParseError> {
        match self.peek() {
            Some(t) if Self::is_ident(t) => {
                self.pos += 1;
                Ok(t)
            }
            _ => Err(self.err("expected identifier")),
        }
    }

    fn last(&self) -> usize {
        self.pos - 1
    }

    // ---- statements -------------------------------------------------------

    fn peek_set_op(&self) -> bool {
        self.peek_kw("UNION") || self.peek_kw("INTERSECT") || self.peek_kw("EXCEPT")
    }

    fn parse_query(&mut self) -> Result<Draft, ParseError> {
        let start = self.pos;
        let first = self.parse_core()?;
        let mut query = if self.peek_set_op() {
            let mut members = vec![first];
            while self.peek_set_op() {
                let op = if self.eat_kw("UNION") {
                    if self.eat_kw("ALL") {
                        "UNION ALL"
                    } else {
                        "UNION"
                    }
                } else if self.eat_kw("INTERSECT") {
                    "INTERSECT"
                } else {
                    self.pos += 1;
                    "EXCEPT"
                };
                let mut core = self.parse_core()?;
                core.set("set_op", op);
                members.push(core);
            }
            let mut q = Draft::new(NodeKind::Query, start, self.last()).with("compound", "true");
            q.children = members;
            q
        } else {
            first
        };
        if self.peek_kw("ORDER") {
            query.children.push(self.parse_order_by()?);
        }
        if self.peek_kw("LIMIT") {
            query.children.push(self.parse_limit()?);
        }
        query.span.end = self.last();
        Ok(query)
    }

    fn parse_core(&mut self) -> Result<Draft, ParseError> {
        let start = self.expect_kw("SELECT")?;
        let mut select = Draft::new(NodeKind::SelectClause, start, start);
        if self.peek_kw("DISTINCT") || self.peek_kw("ALL") {
            let t = &self.toks[self.pos];
            select
                .children
                .push(Draft::new(NodeKind::Modifier, self.pos, self.pos).with("value", t.text.to_ascii_uppercase()));
            self.pos += 1;
        }
        loop {
            select.children.push(self.parse_select_item()?);
            if !self.eat_sym(",") {
                break;
            }
        }
        select.span.end = self.last();

        let mut core = Draft::new(NodeKind::Query, start, start).child(select);
        if self.peek_kw("FROM") {
            core.children.push(self.parse_from()?);
        }
        if self.peek_kw("WHERE") {
            let s = self.expect_kw("WHERE")?;
            let e = self.parse_expr()?;
            core.children
                .push(Draft::new(NodeKind::WhereClause, s, e.span.end).child(e));
        }
        if self.peek_kw("GROUP") {
            let s = self.expect_kw("GROUP")?;
            self.expect_kw("BY")?;
            let mut g = Draft::new(NodeKind::GroupBy, s, s);
            loop {
                g.children.push(self.parse_expr()?);
                if !self.eat_sym(",") {
                    break;
                }
            }
            g.span.end = self.last();
            core.children.push(g);
        }
        if self.peek_kw("HAVING") {
            let s = self.expect_kw("HAVING")?;
            let e = self.parse_expr()?;
            core.children
                .push(Draft::new(NodeKind::Having, s, e.span.end).child(e));
        }
        core.span.end = self.last();
        Ok(core)
    }

    fn parse_select_item(&mut self) -> Result<Draft, ParseError> {
        if self.peek_sym("*") {
            self.pos += 1;
            return Ok(Draft::new(NodeKind::Star, self.last(), self.last()));
        }
        if self.peek_ident() && self.peek_at(1).is_some_and(|t| t.is_symbol(".")) && self.peek_at(2).is_some_and(|t| t.is_symbol("*")) {
            let t = &self.toks[self.pos];
            let mut star = Draft::new(NodeKind::Star, self.pos, self.pos + 2).with("table", t.ident_value());
            if let Some(q) = quote_style(t) {
                star.set("table_quote", q);
            }
            self.pos += 3;
            return Ok(star);
        }
        let mut e = self.parse_expr()?;
        self.parse_alias(&mut e)?;
        Ok(e)
    }

    fn parse_alias(&mut self, target: &mut Draft) -> Result<(), ParseError> {
        let with_as = self.eat_kw("AS");
        let tok = match self.peek() {
            Some(t) if with_as && (t.kind == TokenKind::Word || t.kind == TokenKind::QuotedIdent || t.kind == TokenKind::String) => t,
            Some(t) if !with_as && Self::is_ident(t) => t,
            _ if with_as => return Err(self.err("expected alias after AS")),
            _ => return Ok(()),
        };
        self.pos += 1;
        if tok.kind == TokenKind::String {
            target.set("alias", unquote_string(&tok.text));
            target.set("alias_quote", "'");
        } else {
            target.set("alias", tok.ident_value());
            if let Some(q) = quote_style(tok) {
                target.set("alias_quote", q);
            }
        }
        if with_as {
            target.set("alias_as", "true");
        }
        target.span.end = self.last();
        Ok(())
    }

    fn parse_from(&mut self) -> Result<Draft, ParseError> {
        let start = self.expect_kw("FROM")?;
        let mut from = Draft::new(NodeKind::FromItem, start, start);
        from.children.push(self.parse_source()?);
        loop {
            if self.eat_sym(",") {
                from.children.push(self.parse_source()?);
            } else if let Some(join) = self.parse_join()? {
                from.children.push(join);
            } else {
                break;
            }
        }
        from.span.end = self.last();
        Ok(from)
    }

    fn parse_join(&mut self) -> Result<Option<Draft>, ParseError> {
        let start = self.pos;
        let mut words = Vec::new();
        if self.peek_kw("NATURAL") {
            words.push("NATURAL");
            self.pos += 1;
        }
        for kw in ["LEFT", "RIGHT", "FULL"] {
            if self.eat_kw(kw) {
                words.push(kw);
                if self.eat_kw("OUTER") {
                    words.push("OUTER");
                }
                break;
            }
        }
        if words.len() == usize::from(words.first() == Some(&"NATURAL")) {
            for kw in ["INNER", "CROSS"] {
                if self.eat_kw(kw) {
                    words.push(kw);
                    break;
                }
            }
        }
        if !self.eat_kw("JOIN") {
            if words.is_empty() {
                return Ok(None);
            }
            return Err(self.err("expected JOIN"));
        }
        words.push("JOIN");
        let source = self.parse_source()?;
        let mut join = Draft::new(NodeKind::Join, start, start)
            .with("join_type", words.join(" "))
            .child(source);
        if self.eat_kw("ON") {
            join.set("constraint", "on");
            join.children.push(self.parse_expr()?);
        } else if self.eat_kw("USING") {
            join.set("constraint", "using");
            self.expect_sym("(")?;
            loop {
                let t = self.expect_ident()?;
                let mut c = Draft::new(NodeKind::ColumnRef, self.last(), self.last()).with("name", t.ident_value());
                if let Some(q) = quote_style(t) {
                    c.set("name_quote", q);
                }
                join.children.push(c);
                if !self.eat_sym(",") {
                    break;
                }
            }
            self.expect_sym(")")?;
        } else {
            join.set("constraint", "none");
        }
        join.span.end = self.last();
        Ok(Some(join))
    }

    fn parse_source(&mut self) -> Result<Draft, ParseError> {
        let start = self.pos;
        let mut src = if self.peek_sym("(") {
            if !self.peek_kw_at(1, "SELECT") {
                return Err(ParseError::new(self.pos + 1, "expected subquery"));
            }
            self.pos += 1;
            let q = self.parse_query()?;
            self.expect_sym(")")?;
            Draft::new(NodeKind::Subquery, start, self.last()).child(q)
        } else {
            let t = self.expect_ident()?;
            let mut tr = Draft::new(NodeKind::TableRef, start, start).with("name", t.ident_value());
            if let Some(q) = quote_style(t) {
                tr.set("name_quote", q);
            }
            tr
        };
        self.parse_alias(&mut src)?;
        Ok(src)
    }

    fn parse_order_by(&mut self) -> Result<Draft, ParseError> {
        let start = self.expect_kw("ORDER")?;
        self.expect_kw("BY")?;
        let mut ob = Draft::new(NodeKind::OrderBy, start, start);
        loop {
            ob.children.push(self.parse_expr()?);
            if self.peek_kw("ASC") || self.peek_kw("DESC") {
                let v = self.toks[self.pos].text.to_ascii_uppercase();
                ob.children
                    .push(Draft::new(NodeKind::Modifier, self.pos, self.pos).with("value", v));
                self.pos += 1;
            }
            if !self.eat_sym(",") {
                break;
            }
        }
        ob.span.end = self.last();
        Ok(ob)
    }

    fn parse_limit(&mut self) -> Result<Draft, ParseError> {
        let start = self.expect_kw("LIMIT")?;
        let mut lim = Draft::new(NodeKind::Limit, start, start).child(self.parse_expr()?);
        if self.eat_kw("OFFSET") {
            lim.set("offset_style", "offset");
            lim.children.push(self.parse_expr()?);
        } else if self.eat_sym(",") {
            lim.set("offset_style", "comma");
            lim.children.push(self.parse_expr()?);
        }
        lim.span.end = self.last();
        Ok(lim)
    }

    // ---- expressions ------------------------------------------------------

    pub(crate) fn parse_expr(&mut self) -> Result<Draft, ParseError> {
        self.parse_nary("OR", Self::parse_and)
    }

    fn parse_and(&mut self) -> Result<Draft, ParseError> {
        self.parse_nary("AND", Self::parse_not)
    }

    fn parse_nary(
        &mut self,
        op: &str,
        next: fn(&mut Self) -> Result<Draft, ParseError>,
    ) -> Result<Draft, ParseError> {
        let first = next(self)?;
        if !self.peek_kw(op) {
            return Ok(first);
        }
        let mut node = Draft::new(NodeKind::LogicalOp, first.span.start, first.span.end).with("op", op);
        node.children.push(first);
        while self.eat_kw(op) {
            node.children.push(next(self)?);
        }
        node.span.end = self.last();
        Ok(node)
    }

    fn parse_not(&mut self) -> Result<Draft, ParseError> {
        if self.peek_kw("NOT") {
            let start = self.pos;
            self.pos += 1;
            let inner = self.parse_not()?;
            let end = inner.span.end;
            return Ok(Draft::new(NodeKind::LogicalOp, start, end)
                .with("op", "NOT")
                .child(inner));
        }
        self.parse_comparison()
    }

    fn parse_comparison(&mut self) -> Result<Draft, ParseError> {
        let left = self.parse_additive()?;
        let start = left.span.start;
        const SYMS: &[&str] = &["=", "==", "!=", "<>", "<", "<=", ">", ">="];
        if let Some(t) = self.peek().filter(|t| t.kind == TokenKind::Symbol && SYMS.contains(&t.text.as_str())) {
            self.pos += 1;
            let right = self.parse_additive()?;
            return Ok(Draft::new(NodeKind::Comparison, start, right.span.end)
                .with("op", t.text.clone())
                .child(left)
                .child(right));
        }
        if self.eat_kw("IS") {
            let op = if self.eat_kw("NOT") { "IS NOT" } else { "IS" };
            let right = self.parse_additive()?;
            return Ok(Draft::new(NodeKind::Comparison, start, right.span.end)
                .with("op", op)
                .child(left)
                .child(right));
        }
        let negated = self.peek_kw("NOT")
            && ["IN", "LIKE", "GLOB", "BETWEEN"]
                .iter()
                .any(|k| self.peek_kw_at(1, k));
        if negated {
            self.pos += 1;
        }
        let prefix = if negated { "NOT " } else { "" };
        if self.eat_kw("IN") {
            let mut cmp = Draft::new(NodeKind::Comparison, start, start)
                .with("op", format!("{prefix}IN"))
                .child(left);
            let open = self.expect_sym("(")?;
            if self.peek_kw("SELECT") {
                let q = self.parse_query()?;
                self.expect_sym(")")?;
                cmp.children
                    .push(Draft::new(NodeKind::Subquery, open, self.last()).child(q));
            } else {
                cmp.set("in_list", "true");
                if !self.peek_sym(")") {
                    loop {
                        cmp.children.push(self.parse_expr()?);
                        if !self.eat_sym(",") {
                            break;
                        }
                    }
                }
                self.expect_sym(")")?;
            }
            cmp.span.end = self.last();
            return Ok(cmp);
        }
        for kw in ["LIKE", "GLOB"] {
            if self.eat_kw(kw) {
                let right = self.parse_additive()?;
                let mut cmp = Draft::new(NodeKind::Comparison, start, right.span.end)
                    .with("op", format!("{prefix}{kw}"))
                    .child(left);
                cmp.children.push(right);
                if self.eat_kw("ESCAPE") {
                    cmp.set("escape", "true");
                    cmp.children.push(self.parse_additive()?);
                }
                cmp.span.end = self.last();
                return Ok(cmp);
            }
        }
        if self.eat_kw("BETWEEN") {
            let lo = self.parse_additive()?;
            self.expect_kw("AND")?;
            let hi = self.parse_additive()?;
            return Ok(Draft::new(NodeKind::Comparison, start, hi.span.end)
                .with("op", format!("{prefix}BETWEEN"))
                .child(left)
                .child(lo)
                .child(hi));
        }
        Ok(left)
    }

    fn parse_binary(
        &mut self,
        ops: &[&str],
        next: fn(&mut Self) -> Result<Draft, ParseError>,
    ) -> Result<Draft, ParseError> {
        let mut left = next(self)?;
        while let Some(t) = self.peek().filter(|t| t.kind == TokenKind::Symbol && ops.contains(&t.text.as_str())) {
            self.pos += 1;
            let right = next(self)?;
            left = Draft::new(NodeKind::Arithmetic, left.span.start, right.span.end)
                .with("op", t.text.clone())
                .child(left)
                .child(right);
        }
        Ok(left)
    }

    fn parse_additive(&mut self) -> Result<Draft, ParseError> {
        self.parse_binary(&["+", "-"], Self::parse_multiplicative)
    }

    fn parse_multiplicative(&mut self) -> Result<Draft, ParseError> {
        self.parse_binary(&["*", "/", "%"], Self::parse_concat)
    }

    fn parse_concat(&mut self) -> Result<Draft, ParseError> {
        self.parse_binary(&["||"], Self::parse_unary)
    }

    fn parse_unary(&mut self) -> Result<Draft, ParseError> {
        let start = self.pos;
        if let Some(t) = self.peek().filter(|t| t.is_symbol("-") || t.is_symbol("+") || t.is_symbol("~")) {
            if t.text == "-" && self.peek_at(1).is_some_and(|n| n.kind == TokenKind::Number) {
                let num = &self.toks[self.pos + 1];
                self.pos += 2;
                let lit = Draft::new(NodeKind::Literal, start, start + 1)
                    .with("type", "number")
                    .with("value", format!("-{}", num.text));
                return self.parse_postfix(lit);
            }
            self.pos += 1;
            let inner = self.parse_unary()?;
            let end = inner.span.end;
            return Ok(Draft::new(NodeKind::Arithmetic, start, end)
                .with("op", t.text.clone())
                .with("unary", "true")
                .child(inner));
        }
        let prim = self.parse_primary()?;
        self.parse_postfix(prim)
    }

    fn parse_postfix(&mut self, mut e: Draft) -> Result<Draft, ParseError> {
        while self.eat_kw("COLLATE") {
            let t = self.expect_ident()?;
            e.set("collate", t.text.clone());
            e.span.end = self.last();
        }
        Ok(e)
    }

    fn parse_primary(&mut self) -> Result<Draft, ParseError> {
        let start = self.pos;
        let Some(tok) = self.peek() else {
            return Err(self.err("unexpected end of input"));
        };
        match tok.kind {
            TokenKind::Number => {
                self.pos += 1;
                return Ok(Draft::new(NodeKind::Literal, start, start)
                    .with("type", "number")
                    .with("value", tok.text.clone()));
            }
            TokenKind::String => {
                self.pos += 1;
                return Ok(Draft::new(NodeKind::Literal, start, start)
                    .with("type", "string")
                    .with("value", unquote_string(&tok.text)));
            }
            TokenKind::Symbol if tok.text == "(" => {
                self.pos += 1;
                if self.peek_kw("SELECT") {
                    let q = self.parse_query()?;
                    self.expect_sym(")")?;
                    return Ok(Draft::new(NodeKind::Subquery, start, self.last()).child(q));
                }
                let mut e = self.parse_expr()?;
                self.expect_sym(")")?;
                let n: u32 = e.attrs.get("parens").and_then(|v| v.parse().ok()).unwrap_or(0);
                e.set("parens", (n + 1).to_string());
                e.span = Span::new(start, self.last());
                return Ok(e);
            }
            _ => {}
        }
        if tok.is_keyword("NULL") {
            self.pos += 1;
            return Ok(Draft::new(NodeKind::Literal, start, start)
                .with("type", "null")
                .with("value", "NULL"));
        }
        if tok.kind == TokenKind::Word && LITERAL_KEYWORDS.iter().any(|k| tok.is_keyword(k)) {
            self.pos += 1;
            return Ok(Draft::new(NodeKind::Literal, start, start)
                .with("type", "keyword")
                .with("value", tok.text.to_ascii_uppercase()));
        }
        if tok.is_keyword("CASE") {
            return self.parse_case();
        }
        if tok.is_keyword("CAST") {
            return self.parse_cast();
        }
        if tok.is_keyword("EXISTS") {
            self.pos += 1;
            let open = self.expect_sym("(")?;
            let q = self.parse_query()?;
            self.expect_sym(")")?;
            let sub = Draft::new(NodeKind::Subquery, open, self.last()).child(q);
            return Ok(Draft::new(NodeKind::Predicate, start, self.last())
                .with("op", "EXISTS")
                .child(sub));
        }
        if Self::is_ident(tok) {
            self.pos += 1;
            if tok.kind == TokenKind::Word && self.peek_sym("(") {
                return self.parse_call(tok, start);
            }
            let mut col = Draft::new(NodeKind::ColumnRef, start, start);
            if self.peek_sym(".") && self.peek_at(1).is_some_and(Self::is_ident) {
                let name = &self.toks[self.pos + 1];
                self.pos += 2;
                col.set("table", tok.ident_value());
                if let Some(q) = quote_style(tok) {
                    col.set("table_quote", q);
                }
                col.set("name", name.ident_value());
                if let Some(q) = quote_style(name) {
                    col.set("name_quote", q);
                }
                col.span.end = self.last();
            } else {
                col.set("name", tok.ident_value());
                if let Some(q) = quote_style(tok) {
                    col.set("name_quote", q);
                }
            }
            return Ok(col);
        }
        Err(self.err(format!("expected expression, found {:?}", tok.text)))
    }

    fn parse_call(&mut self, name: &Token, start: usize) -> Result<Draft, ParseError> {
        self.expect_sym("(")?;
        let mut call = Draft::new(NodeKind::FunctionCall, start, start).with("name", name.text.clone());
        if self.peek_sym("*") {
            self.pos += 1;
            call.children
                .push(Draft::new(NodeKind::Star, self.last(), self.last()));
        } else if !self.peek_sym(")") {
            if self.peek_kw("DISTINCT") {
                call.children.push(
                    Draft::new(NodeKind::Modifier, self.pos, self.pos).with("value", "DISTINCT"),
                );
                self.pos += 1;
            }
            loop {
                call.children.push(self.parse_expr()?);
                if !self.eat_sym(",") {
                    break;
                }
            }
        }
        self.expect_sym(")")?;
        call.span.end = self.last();
        Ok(call)
    }

    fn parse_case(&mut self) -> Result<Draft, ParseError> {
        let start = self.expect_kw("CASE")?;
        let mut call = Draft::new(NodeKind::FunctionCall, start, start).with("name", "CASE");
        if !self.peek_kw("WHEN") {
            call.set("case_operand", "true");
            call.children.push(self.parse_expr()?);
        }
        if !self.peek_kw("WHEN") {
            return Err(self.err("expected WHEN"));
        }
        while self.eat_kw("WHEN") {
            call.children.push(self.parse_expr()?);
            self.expect_kw("THEN")?;
            call.children.push(self.parse_expr()?);
        }
        if self.eat_kw("ELSE") {
            call.set("case_else", "true");
            call.children.push(self.parse_expr()?);
        }
        self.expect_kw("END")?;
        call.span.end = self.last();
        Ok(call)
    }

    fn parse_cast(&mut self) -> Result<Draft, ParseError> {
        let start = self.expect_kw("CAST")?;
        self.expect_sym("(")?;
        let inner = self.parse_expr()?;
        self.expect_kw("AS")?;
        let mut ty = Vec::new();
        let mut depth = 0usize;
        loop {
            let Some(t) = self.peek() else {
                return Err(self.err("unterminated CAST"));
            };
            if t.is_symbol(")") {
                if depth == 0 {
                    break;
                }
                depth -= 1;
            } else if t.is_symbol("(") {
                depth += 1;
            }
            ty.push(t.text.clone());
            self.pos += 1;
        }
        if ty.is_empty() {
            return Err(self.err("expected type name"));
        }
        self.expect_sym(")")?;
        Ok(Draft::new(NodeKind::FunctionCall, start, self.last())
            .with("name", "CAST")
            .with("cast_type", ty.join(" "))
            .child(inner))
    }
}
