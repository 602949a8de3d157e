//! AST to SQL text.

use super::lexer::{quote_ident, quote_string};
use super::{NodeId, NodeKind, SqlAst};

fn precedence(ast: &SqlAst, id: NodeId) -> u8 {
    let n = ast.node(id);
    match n.kind {
        NodeKind::LogicalOp => match n.attr("op") {
            Some("OR") => 1,
            Some("AND") => 2,
            _ => 3,
        },
        NodeKind::Comparison => 4,
        NodeKind::Arithmetic => {
            if n.attr("unary").is_some() {
                9
            } else {
                match n.attr("op") {
                    Some("+") | Some("-") => 6,
                    Some("||") => 8,
                    _ => 7,
                }
            }
        }
        _ => 10,
    }
}

pub fn render_node(ast: &SqlAst, id: NodeId) -> String {
    let node = ast.node(id);
    if node.kind.is_expression() || node.kind == NodeKind::TableRef {
        render_expr(ast, id, 0)
    } else {
        render_bare(ast, id)
    }
}

fn render_expr(ast: &SqlAst, id: NodeId, min_prec: u8) -> String {
    let node = ast.node(id);
    let mut out = render_bare(ast, id);
    let explicit: usize = node.attr("parens").and_then(|v| v.parse().ok()).unwrap_or(0);
    let needed = usize::from(precedence(ast, id) < min_prec);
    for _ in 0..explicit.max(needed) {
        out = format!("({out})");
    }
    if let Some(c) = node.attr("collate") {
        out.push_str(" COLLATE ");
        out.push_str(c);
    }
    if let Some(alias) = node.attr("alias") {
        if node.attr("alias_as").is_some() {
            out.push_str(" AS");
        }
        out.push(' ');
        match node.attr("alias_quote") {
            Some("'") => out.push_str(&quote_string(alias)),
            q => out.push_str(&quote_ident(alias, q)),
        }
    }
    out
}

fn ident(name: &str, quote: Option<&str>) -> String {
    quote_ident(name, quote)
}

fn qualified(ast: &SqlAst, id: NodeId, name: &str) -> String {
    let n = ast.node(id);
    match n.attr("table") {
        Some(t) => format!("{}.{}", ident(t, n.attr("table_quote")), name),
        None => name.to_string(),
    }
}

fn join_exprs(ast: &SqlAst, ids: &[NodeId], min_prec: u8, sep: &str) -> String {
    ids.iter()
        .map(|c| render_expr(ast, *c, min_prec))
        .collect::<Vec<_>>()
        .join(sep)
}

fn render_bare(ast: &SqlAst, id: NodeId) -> String {
    let node = ast.node(id);
    let ch = &node.children;
    match node.kind {
        NodeKind::Query => {
            let mut parts: Vec<String> = Vec::new();
            for c in ch {
                let child = ast.node(*c);
                let text = render_bare(ast, *c);
                match child.attr("set_op") {
                    Some(op) if child.kind == NodeKind::Query => parts.push(format!("{op} {text}")),
                    _ => parts.push(text),
                }
            }
            let mut out = parts.join(" ");
            if node.attr("terminator").is_some() {
                out.push(';');
            }
            out
        }
        NodeKind::SelectClause => {
            let mut out = String::from("SELECT ");
            let mut items = ch.as_slice();
            if let Some(first) = items.first() {
                if ast.node(*first).kind == NodeKind::Modifier {
                    out.push_str(ast.node(*first).attr("value").unwrap_or(""));
                    out.push(' ');
                    items = &items[1..];
                }
            }
            out.push_str(&join_exprs(ast, items, 0, ", "));
            out
        }
        NodeKind::FromItem => {
            let mut out = String::from("FROM ");
            for (i, c) in ch.iter().enumerate() {
                if i > 0 {
                    out.push_str(if ast.node(*c).kind == NodeKind::Join { " " } else { ", " });
                }
                out.push_str(&render_node(ast, *c));
            }
            out
        }
        NodeKind::Join => {
            let mut out = format!(
                "{} {}",
                node.attr("join_type").unwrap_or("JOIN"),
                render_node(ast, ch[0])
            );
            match node.attr("constraint") {
                Some("on") => {
                    out.push_str(" ON ");
                    out.push_str(&render_expr(ast, ch[1], 0));
                }
                Some("using") => {
                    out.push_str(" USING (");
                    out.push_str(&join_exprs(ast, &ch[1..], 0, ", "));
                    out.push(')');
                }
                _ => {}
            }
            out
        }
        NodeKind::WhereClause => format!("WHERE {}", render_expr(ast, ch[0], 0)),
        NodeKind::Having => format!("HAVING {}", render_expr(ast, ch[0], 0)),
        NodeKind::GroupBy => format!("GROUP BY {}", join_exprs(ast, ch, 0, ", ")),
        NodeKind::OrderBy => {
            let mut out = String::from("ORDER BY ");
            for (i, c) in ch.iter().enumerate() {
                let child = ast.node(*c);
                if child.kind == NodeKind::Modifier {
                    out.push(' ');
                    out.push_str(child.attr("value").unwrap_or(""));
                } else {
                    if i > 0 {
                        out.push_str(", ");
                    }
                    out.push_str(&render_expr(ast, *c, 0));
                }
            }
            out
        }
        NodeKind::Limit => {
            let mut out = format!("LIMIT {}", render_expr(ast, ch[0], 0));
            if ch.len() > 1 {
                let sep = if node.attr("offset_style") == Some("comma") { ", " } else { " OFFSET " };
                out.push_str(sep);
                out.push_str(&render_expr(ast, ch[1], 0));
            }
            out
        }
        NodeKind::Predicate => format!(
            "{} {}",
            node.attr("op").unwrap_or("EXISTS"),
            render_expr(ast, ch[0], 0)
        ),
        NodeKind::Comparison => {
            let op = node.attr("op").unwrap_or("=");
            let left = render_expr(ast, ch[0], 5);
            if op.ends_with("IN") {
                if node.attr("in_list").is_some() {
                    format!("{left} {op} ({})", join_exprs(ast, &ch[1..], 0, ", "))
                } else {
                    format!("{left} {op} {}", render_expr(ast, ch[1], 0))
                }
            } else if op.ends_with("BETWEEN") {
                format!(
                    "{left} {op} {} AND {}",
                    render_expr(ast, ch[1], 5),
                    render_expr(ast, ch[2], 5)
                )
            } else {
                let mut out = format!("{left} {op} {}", render_expr(ast, ch[1], 5));
                if node.attr("escape").is_some() {
                    out.push_str(" ESCAPE ");
                    out.push_str(&render_expr(ast, ch[2], 5));
                }
                out
            }
        }
        NodeKind::LogicalOp => match node.attr("op") {
            Some("NOT") => format!("NOT {}", render_expr(ast, ch[0], 3)),
            Some(op) => {
                let min = if op == "OR" { 2 } else { 3 };
                join_exprs(ast, ch, min, &format!(" {op} "))
            }
            None => String::new(),
        },
        NodeKind::Arithmetic => {
            let op = node.attr("op").unwrap_or("+");
            if node.attr("unary").is_some() {
                let inner = render_expr(ast, ch[0], 9);
                if inner.starts_with('-') || inner.starts_with('+') {
                    format!("{op} {inner}")
                } else {
                    format!("{op}{inner}")
                }
            } else {
                let p = precedence(ast, id);
                format!(
                    "{} {op} {}",
                    render_expr(ast, ch[0], p),
                    render_expr(ast, ch[1], p + 1)
                )
            }
        }
        NodeKind::FunctionCall => render_call(ast, id),
        NodeKind::ColumnRef => {
            let name = ident(node.attr("name").unwrap_or(""), node.attr("name_quote"));
            qualified(ast, id, &name)
        }
        NodeKind::TableRef => ident(node.attr("name").unwrap_or(""), node.attr("name_quote")),
        NodeKind::Literal => {
            let value = node.attr("value").unwrap_or("");
            match node.attr("type") {
                Some("string") => quote_string(value),
                _ => value.to_string(),
            }
        }
        NodeKind::Modifier => node.attr("value").unwrap_or("").to_string(),
        NodeKind::Subquery => format!("({})", render_bare(ast, ch[0])),
        NodeKind::Star => qualified(ast, id, "*"),
    }
}

fn render_call(ast: &SqlAst, id: NodeId) -> String {
    let node = ast.node(id);
    let ch = &node.children;
    let name = node.attr("name").unwrap_or("");
    if name.eq_ignore_ascii_case("CASE") && node.attr("cast_type").is_none() {
        let mut out = String::from("CASE");
        let mut rest = ch.as_slice();
        if node.attr("case_operand").is_some() {
            out.push(' ');
            out.push_str(&render_expr(ast, rest[0], 0));
            rest = &rest[1..];
        }
        let else_part = if node.attr("case_else").is_some() {
            let (last, body) = rest.split_last().expect("CASE with ELSE has children");
            rest = body;
            Some(*last)
        } else {
            None
        };
        for pair in rest.chunks(2) {
            out.push_str(" WHEN ");
            out.push_str(&render_expr(ast, pair[0], 0));
            if let Some(t) = pair.get(1) {
                out.push_str(" THEN ");
                out.push_str(&render_expr(ast, *t, 0));
            }
        }
        if let Some(e) = else_part {
            out.push_str(" ELSE ");
            out.push_str(&render_expr(ast, e, 0));
        }
        out.push_str(" END");
        return out;
    }
    if let Some(ty) = node.attr("cast_type") {
        return format!("CAST({} AS {ty})", render_expr(ast, ch[0], 0));
    }
    let mut args = ch.as_slice();
    let mut prefix = "";
    if let Some(first) = args.first() {
        if ast.node(*first).kind == NodeKind::Modifier {
            prefix = "DISTINCT ";
            args = &args[1..];
        }
    }
    format!("{name}({prefix}{})", join_exprs(ast, args, 0, ", "))
}
