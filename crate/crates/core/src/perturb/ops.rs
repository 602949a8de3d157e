//! Site enumeration and candidate mutations for each error type.

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::Rng;
use rusqlite::Connection;

use super::values::variants;
use super::MutationEntry;
use crate::analysis::{resolve_column, resolve_schema_column, Resolution};
use crate::ast::{query_bindings, AstEditor, NodeId, NodeKind, SqlAst};
use crate::detect::{in_domain, value_sites};
use crate::schema::{lookup_values, SchemaGraph, DEFAULT_LOOKUP_LIMIT};
use crate::taxonomy::{ErrorType, LocalizationBlock};
use crate::value::Value;

pub(crate) struct Candidate {
    pub sql: String,
    pub entries: Vec<MutationEntry>,
    pub block: LocalizationBlock,
}

pub(crate) struct OpCtx<'a> {
    pub ast: &'a SqlAst,
    pub schema: &'a SchemaGraph,
    pub conn: &'a Connection,
}

/// Candidate lists per applicable site; within a site, candidates are in
/// preference order.
pub(crate) fn sites<R: Rng>(label: ErrorType, cx: &OpCtx, rng: &mut R) -> Vec<Vec<Candidate>> {
    use ErrorType::*;
    let mut out = match label {
        AttributeMismatch => attribute_mismatch(cx, rng),
        AttributeRedundancy => attribute_redundancy(cx, rng),
        AttributeMissing => attribute_missing(cx),
        TableMismatch => table_mismatch(cx),
        TableRedundancy => table_redundancy(cx, rng),
        TableMissing => table_missing(cx),
        ValueError => value_error(cx),
        ConditionMissing => condition_missing(cx),
        ConditionError => condition_error(cx),
        FunctionError => function_error(cx),
        ClauseError => clause_error(cx),
        ModifierError => modifier_error(cx),
    };
    out.retain(|s| !s.is_empty());
    out
}

fn clause_name(ast: &SqlAst, id: NodeId) -> &'static str {
    let mut cur = Some(id);
    while let Some(n) = cur {
        match ast.node(n).kind {
            NodeKind::SelectClause => return "SELECT",
            NodeKind::FromItem => return "FROM",
            NodeKind::WhereClause => return "WHERE",
            NodeKind::GroupBy => return "GROUP BY",
            NodeKind::Having => return "HAVING",
            NodeKind::OrderBy => return "ORDER BY",
            NodeKind::Limit => return "LIMIT",
            _ => cur = ast.node(n).parent,
        }
    }
    "statement"
}

fn block(label: ErrorType, nodes: Vec<String>, schema: Vec<String>, slots: &[(&str, String)]) -> LocalizationBlock {
    let mut b = LocalizationBlock::new(label);
    b.nodes = nodes.into_iter().filter(|n| !n.is_empty()).collect();
    b.schema = schema;
    for (k, v) in slots {
        b.slots.insert(k.to_string(), v.clone());
    }
    b
}

fn candidate(
    ed: &AstEditor,
    entries: Vec<MutationEntry>,
    block: LocalizationBlock,
) -> Candidate {
    Candidate {
        sql: ed.render(),
        entries,
        block,
    }
}

fn entry(node: NodeId, before: String, after: String) -> MutationEntry {
    MutationEntry { node, before, after }
}

fn plain_queries(ast: &SqlAst) -> Vec<NodeId> {
    ast.find_all(NodeKind::Query)
        .into_iter()
        .filter(|q| ast.node(*q).attr("compound").is_none())
        .collect()
}

/// The statement's query node when it is not compound.
fn top_query(ast: &SqlAst) -> Option<NodeId> {
    let root = ast.root();
    ast.node(root).attr("compound").is_none().then_some(root)
}

fn select_items(ast: &SqlAst, select: NodeId) -> Vec<NodeId> {
    ast.node(select)
        .children
        .iter()
        .copied()
        .filter(|c| ast.node(*c).kind != NodeKind::Modifier)
        .collect()
}

fn column_label(ast: &SqlAst, schema: &SchemaGraph, col: NodeId) -> Vec<String> {
    resolve_schema_column(ast, schema, col)
        .map(|c| vec![c.to_string()])
        .unwrap_or_default()
}

fn attribute_mismatch<R: Rng>(cx: &OpCtx, rng: &mut R) -> Vec<Vec<Candidate>> {
    let ast = cx.ast;
    let mut out = Vec::new();
    for col in ast.find_all(NodeKind::ColumnRef) {
        let clause = clause_name(ast, col);
        if clause == "FROM" || clause == "statement" {
            continue;
        }
        let Some(cid) = resolve_schema_column(ast, cx.schema, col) else {
            continue;
        };
        let before = ast.render(col);
        let mut others: Vec<_> = cx
            .schema
            .columns_of(&cid.table)
            .into_iter()
            .filter(|c| !c.name.eq_ignore_ascii_case(&cid.column))
            .collect();
        others.shuffle(rng);
        let site = others
            .into_iter()
            .map(|other| {
                let mut ed = AstEditor::new(ast);
                ed.set_attr(col, "name", other.name.clone());
                ed.remove_attr(col, "name_quote");
                if other.name.contains(' ') || crate::ast::is_reserved(&other.name) {
                    ed.set_attr(col, "name_quote", "\"");
                }
                let after = ed.tree().render(col);
                let b = block(
                    ErrorType::AttributeMismatch,
                    vec![after.clone()],
                    vec![format!("{}.{}", cid.table, other.name)],
                    &[
                        ("current_attribute", after.clone()),
                        ("clause", clause.to_string()),
                        ("intended_attribute", before.clone()),
                        ("source_table", cid.table.clone()),
                        ("reason", "a co-occurring column of the same table is used instead".into()),
                    ],
                );
                candidate(&ed, vec![entry(col, before.clone(), after)], b)
            })
            .collect();
        out.push(site);
    }
    out
}

fn attribute_redundancy<R: Rng>(cx: &OpCtx, rng: &mut R) -> Vec<Vec<Candidate>> {
    let ast = cx.ast;
    let Some(q) = top_query(ast) else { return Vec::new() };
    let Some(select) = ast.child_of_kind(q, NodeKind::SelectClause) else {
        return Vec::new();
    };
    let items = select_items(ast, select);
    if items.iter().any(|i| ast.node(*i).kind == NodeKind::Star) {
        return Vec::new();
    }
    let bindings = query_bindings(ast, q);
    let selected: BTreeSet<String> = items
        .iter()
        .filter(|i| ast.node(**i).kind == NodeKind::ColumnRef)
        .filter_map(|i| ast.node(*i).attr("name").map(str::to_ascii_lowercase))
        .collect();
    let qualify = bindings.len() > 1;
    let mut options = Vec::new();
    for b in &bindings {
        let Some(t) = &b.table else { continue };
        for c in cx.schema.columns_of(t) {
            if !selected.contains(&c.name.to_ascii_lowercase()) {
                options.push((b.name.clone(), c.table.clone(), c.name.clone()));
            }
        }
    }
    options.shuffle(rng);
    let required = items.iter().map(|i| ast.render(*i)).collect::<Vec<_>>().join(", ");
    let site = options
        .into_iter()
        .map(|(binding, table, column)| {
            let mut ed = AstEditor::new(ast);
            let mut attrs = vec![("name", column.as_str())];
            if qualify {
                attrs.push(("table", binding.as_str()));
            }
            if column.contains(' ') || crate::ast::is_reserved(&column) {
                attrs.push(("name_quote", "\""));
            }
            let new = ed.insert_new(select, usize::MAX, NodeKind::ColumnRef, &attrs);
            let after = ed.tree().render(new);
            let b = block(
                ErrorType::AttributeRedundancy,
                vec![after.clone()],
                vec![format!("{table}.{column}")],
                &[
                    ("redundant_attributes", after.clone()),
                    ("clause", "SELECT".into()),
                    ("required_attributes", required.clone()),
                    ("reason", "the column is not requested by the question".into()),
                ],
            );
            candidate(&ed, vec![entry(select, String::new(), after)], b)
        })
        .collect();
    vec![site]
}

fn attribute_missing(cx: &OpCtx) -> Vec<Vec<Candidate>> {
    let ast = cx.ast;
    let Some(q) = top_query(ast) else { return Vec::new() };
    let Some(select) = ast.child_of_kind(q, NodeKind::SelectClause) else {
        return Vec::new();
    };
    let items = select_items(ast, select);
    if items.len() < 2 {
        return Vec::new();
    }
    items
        .iter()
        .map(|item| {
            let mut ed = AstEditor::new(ast);
            ed.detach(*item);
            let before = ast.render(*item);
            let remaining = ed.tree().render(select);
            let schema: Vec<String> = ast
                .descendants(*item)
                .into_iter()
                .filter(|n| ast.node(*n).kind == NodeKind::ColumnRef)
                .flat_map(|n| column_label(ast, cx.schema, n))
                .collect();
            let source = schema
                .first()
                .and_then(|s| s.split('.').next())
                .unwrap_or("n/a")
                .to_string();
            let b = block(
                ErrorType::AttributeMissing,
                vec![remaining.clone()],
                schema,
                &[
                    ("current_attributes", remaining.trim_start_matches("SELECT ").to_string()),
                    ("clause", "SELECT".into()),
                    ("missing_attributes", before.clone()),
                    ("source_table", source),
                    ("reason", "a requested column is not selected".into()),
                ],
            );
            vec![candidate(&ed, vec![entry(*item, before, String::new())], b)]
        })
        .collect()
}

fn near_miss_tables(name: &str, schema: &SchemaGraph) -> Vec<String> {
    let mut out = Vec::new();
    let toggled = match name.strip_suffix('s') {
        Some(stem) if !stem.is_empty() => stem.to_string(),
        _ => format!("{name}s"),
    };
    for c in [toggled, format!("{name}_info"), format!("{name}_list")] {
        if !schema.has_table(&c) && !out.contains(&c) {
            out.push(c);
        }
    }
    out
}

fn table_mismatch(cx: &OpCtx) -> Vec<Vec<Candidate>> {
    let ast = cx.ast;
    ast.find_all(NodeKind::TableRef)
        .into_iter()
        .filter_map(|t| {
            let name = ast.node(t).attr("name")?.to_string();
            let canonical = cx.schema.canonical_table(&name)?.to_string();
            Some(
                near_miss_tables(&name, cx.schema)
                    .into_iter()
                    .map(|wrong| {
                        let mut ed = AstEditor::new(ast);
                        ed.set_attr(t, "name", wrong.clone());
                        let b = block(
                            ErrorType::TableMismatch,
                            vec![wrong.clone()],
                            vec![canonical.clone()],
                            &[
                                ("current_table", wrong.clone()),
                                ("clause", clause_name(ast, t).to_string()),
                                ("correct_table", canonical.clone()),
                                ("join_path", "unchanged".into()),
                                ("reason", "the referenced table does not exist in the schema".into()),
                            ],
                        );
                        candidate(&ed, vec![entry(t, name.clone(), wrong)], b)
                    })
                    .collect(),
            )
        })
        .collect()
}

fn table_redundancy<R: Rng>(cx: &OpCtx, rng: &mut R) -> Vec<Vec<Candidate>> {
    let ast = cx.ast;
    let mut out = Vec::new();
    for q in plain_queries(ast) {
        let Some(from) = ast.child_of_kind(q, NodeKind::FromItem) else {
            continue;
        };
        let bindings = query_bindings(ast, q);
        let bound: BTreeSet<String> = bindings.iter().map(|b| b.name.to_ascii_lowercase()).collect();
        let mut unbound: Vec<String> = cx
            .schema
            .tables
            .iter()
            .filter(|t| !bound.contains(&t.name.to_ascii_lowercase()))
            .filter(|t| !bindings.iter().any(|b| b.table.as_deref().is_some_and(|x| x.eq_ignore_ascii_case(&t.name))))
            .map(|t| t.name.clone())
            .collect();
        unbound.shuffle(rng);
        let mut options: Vec<(String, Option<String>)> = unbound.into_iter().map(|t| (t, None)).collect();
        for b in &bindings {
            if let Some(t) = &b.table {
                let alias = format!("{}_2", t.to_ascii_lowercase());
                if !bound.contains(&alias) {
                    options.push((t.clone(), Some(alias)));
                }
            }
        }
        let required = bindings.iter().filter_map(|b| b.table.clone()).collect::<Vec<_>>().join(", ");
        let site = options
            .into_iter()
            .map(|(table, alias)| {
                let mut ed = AstEditor::new(ast);
                let join = ed.insert_new(
                    from,
                    usize::MAX,
                    NodeKind::Join,
                    &[("join_type", "CROSS JOIN"), ("constraint", "none")],
                );
                let mut attrs = vec![("name", table.as_str())];
                if let Some(a) = &alias {
                    attrs.push(("alias", a.as_str()));
                }
                ed.insert_new(join, 0, NodeKind::TableRef, &attrs);
                let after = ed.tree().render(join);
                let b = block(
                    ErrorType::TableRedundancy,
                    vec![after.clone()],
                    vec![table.clone()],
                    &[
                        ("redundant_table", table.clone()),
                        ("clause", "FROM".into()),
                        ("required_tables", required.clone()),
                        ("reason", "the joined table contributes nothing the question needs".into()),
                    ],
                );
                candidate(&ed, vec![entry(from, String::new(), after)], b)
            })
            .collect();
        out.push(site);
    }
    out
}

/// Top-level AND conjuncts of an expression.
fn conjuncts(ast: &SqlAst, expr: NodeId) -> Vec<NodeId> {
    let n = ast.node(expr);
    if n.kind == NodeKind::LogicalOp && n.attr("op") == Some("AND") {
        n.children.iter().flat_map(|c| conjuncts(ast, *c)).collect()
    } else {
        vec![expr]
    }
}

/// Detach `node` and prune AND nodes, WHERE clauses and ON constraints left empty.
fn remove_conjunct(ed: &mut AstEditor, node: NodeId) {
    let mut cur = node;
    loop {
        let parent = ed.node(cur).parent.expect("conjunct has a parent");
        let pkind = ed.node(parent).kind;
        ed.detach(cur);
        let left = ed.node(parent).children.len();
        match pkind {
            NodeKind::LogicalOp if left == 0 => cur = parent,
            NodeKind::WhereClause | NodeKind::Having => {
                ed.detach(parent);
                return;
            }
            NodeKind::Join => {
                ed.set_attr(parent, "constraint", "none");
                return;
            }
            _ => return,
        }
    }
}

fn table_missing(cx: &OpCtx) -> Vec<Vec<Candidate>> {
    let ast = cx.ast;
    let mut out = Vec::new();
    for q in plain_queries(ast) {
        let Some(from) = ast.child_of_kind(q, NodeKind::FromItem) else {
            continue;
        };
        let items = ast.node(from).children.clone();
        let bindings = query_bindings(ast, q);
        // Droppable conjuncts: WHERE and every join's ON condition.
        let mut roots: Vec<NodeId> = Vec::new();
        if let Some(w) = ast.child_of_kind(q, NodeKind::WhereClause) {
            roots.push(ast.node(w).children[0]);
        }
        for it in &items {
            let n = ast.node(*it);
            if n.kind == NodeKind::Join && n.attr("constraint") == Some("on") {
                roots.push(n.children[1]);
            }
        }
        let all_conj: Vec<NodeId> = roots.iter().flat_map(|r| conjuncts(ast, *r)).collect();
        for (i, item) in items.iter().enumerate().skip(1) {
            let b = &bindings[i];
            let Some(table) = b.table.clone() else { continue };
            let item_node = ast.node(*item);
            if item_node.kind == NodeKind::Join && item_node.attr("constraint") == Some("using") {
                continue;
            }
            let own_on: BTreeSet<NodeId> = if item_node.kind == NodeKind::Join {
                item_node.children.iter().skip(1).flat_map(|c| ast.descendants(*c)).collect()
            } else {
                BTreeSet::new()
            };
            let mut drop: BTreeSet<NodeId> = BTreeSet::new();
            let mut ok = true;
            for id in ast.descendants(q) {
                let n = ast.node(id);
                let refs_it = match n.kind {
                    NodeKind::ColumnRef => match resolve_column(ast, cx.schema, id) {
                        Resolution::Bound { query, binding, .. } => query == q && binding == i,
                        Resolution::Ambiguous { query, bindings } => query == q && bindings.contains(&i),
                        Resolution::Unresolved => false,
                    },
                    NodeKind::Star => n.attr("table").is_some_and(|t| t.eq_ignore_ascii_case(&b.name)),
                    _ => false,
                };
                if !refs_it || own_on.contains(&id) {
                    continue;
                }
                match all_conj.iter().find(|c| ast.descendants(**c).contains(&id)) {
                    Some(c) => {
                        drop.insert(*c);
                    }
                    None => {
                        ok = false;
                        break;
                    }
                }
            }
            if !ok {
                continue;
            }
            let mut ed = AstEditor::new(ast);
            let on_text = if item_node.kind == NodeKind::Join && item_node.attr("constraint") == Some("on") {
                ast.render(item_node.children[1])
            } else {
                "none".to_string()
            };
            ed.detach(*item);
            let mut entries = vec![entry(*item, ast.render(*item), String::new())];
            for c in &drop {
                remove_conjunct(&mut ed, *c);
                entries.push(entry(*c, ast.render(*c), String::new()));
            }
            let from_after = ed.tree().render(from);
            let remaining: Vec<String> = bindings
                .iter()
                .enumerate()
                .filter(|(j, _)| *j != i)
                .filter_map(|(_, b)| b.table.clone())
                .collect();
            let blk = block(
                ErrorType::TableMissing,
                vec![from_after],
                vec![table.clone()],
                &[
                    ("current_tables", remaining.join(", ")),
                    ("clause", "FROM".into()),
                    ("missing_table", table.clone()),
                    ("join_condition", on_text),
                    ("error_type", "required table omitted from FROM".into()),
                ],
            );
            out.push(vec![candidate(&ed, entries, blk)]);
        }
    }
    out
}

fn value_error(cx: &OpCtx) -> Vec<Vec<Candidate>> {
    let ast = cx.ast;
    let mut out = Vec::new();
    for site in value_sites(ast, cx.schema) {
        let Some(col) = cx.schema.column(&site.column.table, &site.column.column) else {
            continue;
        };
        let Ok(domain) = lookup_values(&site.column, cx.conn, DEFAULT_LOOKUP_LIMIT) else {
            continue;
        };
        if !domain.is_assertable() || !in_domain(&site.value, &col.declared_type, &domain.values) {
            continue;
        }
        let before = ast.render(site.literal);
        let cands = variants(&site.value)
            .into_iter()
            .filter(|v| !in_domain(&v.value, &col.declared_type, &domain.values))
            .map(|v| {
                let mut ed = AstEditor::new(ast);
                let (ty, raw) = match &v.value {
                    Value::Text(s) => ("string", s.clone()),
                    other => ("number", other.to_string()),
                };
                ed.set_attr(site.literal, "type", ty);
                ed.set_attr(site.literal, "value", raw);
                let after = ed.tree().render(site.literal);
                let b = block(
                    ErrorType::ValueError,
                    vec![after.clone()],
                    vec![site.column.to_string()],
                    &[
                        ("current_value", after.clone()),
                        ("clause", clause_name(ast, site.literal).to_string()),
                        ("correct_value_from_nl", before.clone()),
                        ("data_type", col.declared_type.clone()),
                        ("format_issue", v.kind.to_string()),
                    ],
                );
                candidate(&ed, vec![entry(site.literal, before.clone(), after)], b)
            })
            .collect();
        out.push(cands);
    }
    out
}

fn filter_roots(ast: &SqlAst) -> Vec<(NodeId, &'static str)> {
    let mut out = Vec::new();
    for q in plain_queries(ast) {
        for (kind, name) in [(NodeKind::WhereClause, "WHERE"), (NodeKind::Having, "HAVING")] {
            if let Some(c) = ast.child_of_kind(q, kind) {
                out.push((c, name));
            }
        }
    }
    out
}

fn condition_missing(cx: &OpCtx) -> Vec<Vec<Candidate>> {
    let ast = cx.ast;
    let mut out = Vec::new();
    for (clause, name) in filter_roots(ast) {
        let expr = ast.node(clause).children[0];
        let conj = conjuncts(ast, expr);
        for c in &conj {
            let mut ed = AstEditor::new(ast);
            remove_conjunct(&mut ed, *c);
            let remaining: Vec<String> = conj.iter().filter(|x| *x != c).map(|x| ast.render(*x)).collect();
            let nodes = if remaining.is_empty() {
                Vec::new()
            } else {
                vec![ed.tree().render(clause)]
            };
            let schema = ast
                .descendants(*c)
                .into_iter()
                .filter(|n| ast.node(*n).kind == NodeKind::ColumnRef)
                .flat_map(|n| column_label(ast, cx.schema, n))
                .collect();
            let b = block(
                ErrorType::ConditionMissing,
                nodes,
                schema,
                &[
                    (
                        "current_conditions",
                        if remaining.is_empty() { "none".into() } else { remaining.join(" AND ") },
                    ),
                    ("clause", name.to_string()),
                    ("missing_condition", ast.render(*c)),
                    ("condition_source", "explicit in the question".into()),
                    ("reason", "a required filter is absent".into()),
                ],
            );
            out.push(vec![candidate(&ed, vec![entry(*c, ast.render(*c), String::new())], b)]);
        }
    }
    out
}

fn flipped_ops(op: &str) -> &'static [&'static str] {
    match op {
        "=" | "==" => &["!="],
        "!=" | "<>" => &["="],
        ">" => &[">=", "<"],
        ">=" => &[">", "<"],
        "<" => &["<=", ">"],
        "<=" => &["<", ">"],
        "LIKE" => &["NOT LIKE"],
        "NOT LIKE" => &["LIKE"],
        "IN" => &["NOT IN"],
        "NOT IN" => &["IN"],
        "BETWEEN" => &["NOT BETWEEN"],
        "NOT BETWEEN" => &["BETWEEN"],
        "IS" => &["IS NOT"],
        "IS NOT" => &["IS"],
        _ => &[],
    }
}

fn condition_error(cx: &OpCtx) -> Vec<Vec<Candidate>> {
    let ast = cx.ast;
    let mut out = Vec::new();
    for (clause, name) in filter_roots(ast) {
        for id in ast.descendants(clause) {
            let n = ast.node(id);
            if ast.enclosing_query(id) != ast.enclosing_query(clause) {
                continue;
            }
            let (ops, is_logic): (Vec<&str>, bool) = match n.kind {
                NodeKind::Comparison => (flipped_ops(n.attr("op").unwrap_or("")).to_vec(), false),
                NodeKind::LogicalOp if n.attr("op") == Some("AND") => (vec!["OR"], true),
                _ => continue,
            };
            let before = ast.render(id);
            let site = ops
                .into_iter()
                .map(|op| {
                    let mut ed = AstEditor::new(ast);
                    ed.set_attr(id, "op", op);
                    if is_logic {
                        let p = ed.node(id).attr("parens").and_then(|v| v.parse::<usize>().ok()).unwrap_or(0);
                        ed.set_attr(id, "parens", (p + 1).to_string());
                    }
                    let after = ed.tree().render(id);
                    let b = block(
                        ErrorType::ConditionError,
                        vec![after.clone()],
                        ast.descendants(id)
                            .into_iter()
                            .filter(|x| ast.node(*x).kind == NodeKind::ColumnRef)
                            .flat_map(|x| column_label(ast, cx.schema, x))
                            .collect(),
                        &[
                            ("current_condition", after.clone()),
                            ("clause", name.to_string()),
                            ("intended_condition", before.clone()),
                            ("issue_kind", if is_logic { "logical connective" } else { "comparison operator" }.into()),
                            ("reason", "the condition does not express the question's constraint".into()),
                        ],
                    );
                    candidate(&ed, vec![entry(id, before.clone(), after)], b)
                })
                .collect();
            out.push(site);
        }
    }
    out
}

fn function_swaps(name: &str) -> (&'static [&'static str], &'static str) {
    match name.to_ascii_uppercase().as_str() {
        "MAX" => (&["MIN"], "aggregate"),
        "MIN" => (&["MAX"], "aggregate"),
        "AVG" => (&["SUM", "MAX"], "aggregate"),
        "SUM" => (&["AVG", "MAX"], "aggregate"),
        "COUNT" => (&["SUM"], "aggregate"),
        "UPPER" => (&["LOWER"], "string"),
        "LOWER" => (&["UPPER"], "string"),
        "ABS" => (&["ROUND"], "math"),
        "ROUND" => (&["ABS"], "math"),
        "LENGTH" => (&["UPPER"], "string"),
        _ => (&[], ""),
    }
}

fn function_error(cx: &OpCtx) -> Vec<Vec<Candidate>> {
    let ast = cx.ast;
    let mut out = Vec::new();
    for f in ast.find_all(NodeKind::FunctionCall) {
        let n = ast.node(f);
        if n.attr("cast_type").is_some() {
            continue;
        }
        let name = n.attr("name").unwrap_or("").to_string();
        let has_star = n.children.iter().any(|c| ast.node(*c).kind == NodeKind::Star);
        let (swaps, category) = function_swaps(&name);
        let before = ast.render(f);
        let site = swaps
            .iter()
            .filter(|_| !has_star)
            .map(|new| {
                let mut ed = AstEditor::new(ast);
                ed.set_attr(f, "name", *new);
                let after = ed.tree().render(f);
                let b = block(
                    ErrorType::FunctionError,
                    vec![after.clone()],
                    n.children
                        .iter()
                        .flat_map(|c| ast.descendants(*c))
                        .filter(|x| ast.node(*x).kind == NodeKind::ColumnRef)
                        .flat_map(|x| column_label(ast, cx.schema, x))
                        .collect(),
                    &[
                        ("current_function", after.clone()),
                        ("clause", clause_name(ast, f).to_string()),
                        ("intended_function", before.clone()),
                        ("function_category", category.to_string()),
                        ("reason", "the function computes a different quantity than asked".into()),
                    ],
                );
                candidate(&ed, vec![entry(f, before.clone(), after)], b)
            })
            .collect();
        out.push(site);
    }
    out
}

fn clause_error(cx: &OpCtx) -> Vec<Vec<Candidate>> {
    let ast = cx.ast;
    let mut out = Vec::new();
    for q in ast.find_all(NodeKind::Query) {
        let mut removals: Vec<(Vec<NodeId>, &str)> = Vec::new();
        if ast.node(q).attr("compound").is_none() {
            let group = ast.child_of_kind(q, NodeKind::GroupBy);
            let having = ast.child_of_kind(q, NodeKind::Having);
            if let Some(g) = group {
                removals.push((std::iter::once(g).chain(having).collect(), "GROUP BY"));
            }
            if let Some(h) = having {
                removals.push((vec![h], "HAVING"));
            }
        }
        if let Some(ob) = ast.child_of_kind(q, NodeKind::OrderBy) {
            removals.push((vec![ob], "ORDER BY"));
        }
        if let Some(l) = ast.child_of_kind(q, NodeKind::Limit) {
            removals.push((vec![l], "LIMIT"));
        }
        for (nodes, name) in removals {
            let mut ed = AstEditor::new(ast);
            let mut entries = Vec::new();
            for n in &nodes {
                ed.detach(*n);
                entries.push(entry(*n, ast.render(*n), String::new()));
            }
            let removed: Vec<String> = nodes.iter().map(|n| ast.render(*n)).collect();
            let b = block(
                ErrorType::ClauseError,
                Vec::new(),
                Vec::new(),
                &[
                    ("current_clauses", format!("{name} omitted")),
                    ("clause", name.to_string()),
                    ("required_change", format!("restore {}", removed.join(" "))),
                    ("intended_clause", removed.join(" ")),
                    ("reason", "an essential clause is missing".into()),
                ],
            );
            out.push(vec![candidate(&ed, entries, b)]);
        }
    }
    out
}

fn modifier_error(cx: &OpCtx) -> Vec<Vec<Candidate>> {
    let ast = cx.ast;
    let mut out = Vec::new();
    let mk = |ed: &AstEditor, node: NodeId, before: String, after: String, current: String, intended: String, clause: &str| {
        let b = block(
            ErrorType::ModifierError,
            vec![after.clone()],
            Vec::new(),
            &[
                ("current_modifier", current),
                ("clause", clause.to_string()),
                ("intended_modifier", intended),
                ("reason", "the modifier changes ordering or duplicate handling".into()),
            ],
        );
        candidate(ed, vec![entry(node, before, after)], b)
    };
    for ob in ast.find_all(NodeKind::OrderBy) {
        let ch = ast.node(ob).children.clone();
        for (i, c) in ch.iter().enumerate() {
            if ast.node(*c).kind == NodeKind::Modifier {
                continue;
            }
            let before = ast.render(ob);
            let mut ed = AstEditor::new(ast);
            let (cur, new) = match ch.get(i + 1).filter(|m| ast.node(**m).kind == NodeKind::Modifier) {
                Some(m) => {
                    let v = ast.node(*m).attr("value").unwrap_or("ASC");
                    let new = if v == "DESC" { "ASC" } else { "DESC" };
                    ed.set_attr(*m, "value", new);
                    (v.to_string(), new)
                }
                None => {
                    ed.insert_new(ob, i + 1, NodeKind::Modifier, &[("value", "DESC")]);
                    ("ASC".to_string(), "DESC")
                }
            };
            let after = ed.tree().render(ob);
            out.push(vec![mk(&ed, ob, before, after, new.to_string(), cur, "ORDER BY")]);
        }
    }
    for sel in ast.find_all(NodeKind::SelectClause) {
        let first = ast.node(sel).children.first().copied();
        let before = ast.render(sel);
        let mut ed = AstEditor::new(ast);
        let (cur, intended) = match first.filter(|f| ast.node(*f).kind == NodeKind::Modifier) {
            Some(m) if ast.node(m).attr("value") == Some("DISTINCT") => {
                ed.detach(m);
                ("none", "DISTINCT")
            }
            Some(_) => continue,
            None => {
                ed.insert_new(sel, 0, NodeKind::Modifier, &[("value", "DISTINCT")]);
                ("DISTINCT", "none")
            }
        };
        let after = ed.tree().render(sel);
        out.push(vec![mk(&ed, sel, before, after, cur.into(), intended.into(), "SELECT")]);
    }
    for f in ast.find_all(NodeKind::FunctionCall) {
        let n = ast.node(f);
        if !n.attr("name").is_some_and(|x| x.eq_ignore_ascii_case("COUNT")) {
            continue;
        }
        if n.children.iter().any(|c| ast.node(*c).kind == NodeKind::Star) {
            continue;
        }
        let before = ast.render(f);
        let mut ed = AstEditor::new(ast);
        let (cur, intended) = match n.children.first().filter(|c| ast.node(**c).kind == NodeKind::Modifier) {
            Some(m) => {
                ed.detach(*m);
                ("none", "DISTINCT")
            }
            None => {
                ed.insert_new(f, 0, NodeKind::Modifier, &[("value", "DISTINCT")]);
                ("DISTINCT", "none")
            }
        };
        let after = ed.tree().render(f);
        out.push(vec![mk(&ed, f, before, after, cur.into(), intended.into(), clause_name(ast, f))]);
    }
    out
}
