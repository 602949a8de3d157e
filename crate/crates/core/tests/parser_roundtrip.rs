use std::collections::BTreeSet;

use proptest::prelude::*;
use sqlrefine::ast::{flatten_ast, parse_sql, Dialect, NodeKind, SqlAst};
use sqlrefine::exec::execute_on;
use sqlrefine::fixtures::{materialize, querygen::random_query, roundtrip_corpus};

fn alignment_holds(ast: &SqlAst) -> Result<(), String> {
    let n = ast.source_tokens().len();
    let root = ast.node(ast.root());
    if root.span.start != 0 || root.span.end + 1 != n {
        return Err(format!("root span {:?} does not cover {n} tokens", root.span));
    }
    for (i, node) in ast.nodes().iter().enumerate() {
        if node.id.0 as usize != i {
            return Err(format!("node {i} has id {}", node.id));
        }
        if node.span.start > node.span.end || node.span.end >= n {
            return Err(format!("{} span {:?} outside the token range", node.id, node.span));
        }
        for c in &node.children {
            let child = ast.node(*c);
            if child.parent != Some(node.id) || !node.span.contains(&child.span) {
                return Err(format!("{} does not nest in {}", child.id, node.id));
            }
        }
        for w in node.children.windows(2) {
            if ast.node(w[0]).span.end >= ast.node(w[1]).span.start {
                return Err(format!("children of {} overlap", node.id));
            }
        }
    }
    let reachable: BTreeSet<_> = std::iter::once(ast.root()).chain(ast.descendants(ast.root())).collect();
    if reachable.len() != ast.nodes().len() {
        return Err("nodes unreachable from the root".into());
    }
    Ok(())
}

fn round_trips(sql: &str) -> Result<SqlAst, String> {
    let a = parse_sql(sql, Dialect::Sqlite).map_err(|e| format!("{sql}: {e}"))?;
    let flat = flatten_ast(&a);
    let b = parse_sql(&flat, Dialect::Sqlite).map_err(|e| format!("{flat}: {e}"))?;
    if !a.structurally_equal(&b) {
        return Err(format!("{sql} -> {flat}"));
    }
    if flatten_ast(&b) != flat {
        return Err(format!("flatten is not idempotent on {flat}"));
    }
    Ok(a)
}

#[test]
fn corpus_round_trips() {
    let corpus = roundtrip_corpus();
    assert!(corpus.len() >= 200);
    let mut kinds = BTreeSet::new();
    let mut distinct = false;
    for (_, sql) in &corpus {
        let ast = round_trips(sql).unwrap();
        alignment_holds(&ast).unwrap();
        kinds.extend(ast.nodes().iter().map(|n| n.kind));
        distinct |= ast.find_all(NodeKind::Modifier).iter().any(|m| ast.node(*m).attr("value") == Some("DISTINCT"));
    }
    for k in [NodeKind::Join, NodeKind::GroupBy, NodeKind::Having, NodeKind::OrderBy, NodeKind::Subquery, NodeKind::FunctionCall] {
        assert!(kinds.contains(&k), "{k:?} not covered");
    }
    assert!(distinct);
}

#[test]
fn generated_queries_are_valid_sqlite() {
    let dir = tempfile::tempdir().unwrap();
    materialize(dir.path()).unwrap();
    let conns: Vec<_> = ["library", "retail", "sports", "school"]
        .iter()
        .map(|d| rusqlite::Connection::open(dir.path().join(d).join(format!("{d}.sqlite"))).unwrap())
        .collect();
    for seed in 0..300 {
        let sql = random_query(seed);
        // Each generated query touches tables of one database only.
        let ok = conns.iter().any(|c| execute_on(c, &sql, 5000).is_rows());
        assert!(ok, "{sql}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn generated_queries_round_trip_and_align(seed in any::<u64>()) {
        let sql = random_query(seed);
        let ast = round_trips(&sql).map_err(TestCaseError::fail)?;
        alignment_holds(&ast).map_err(TestCaseError::fail)?;
    }
}
