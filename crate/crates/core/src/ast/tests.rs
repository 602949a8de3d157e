use super::*;

const FIG6_GOLD: &str = "SELECT s.name FROM student s JOIN enrollment e ON s.id = e.student_id WHERE e.status = 'Completed'";

fn parse(sql: &str) -> SqlAst {
    parse_sql(sql, Dialect::Sqlite).unwrap()
}

#[test]
fn running_example_has_one_where_comparison() {
    let ast = parse(FIG6_GOLD);
    let wheres = ast.find_all(NodeKind::WhereClause);
    assert_eq!(wheres.len(), 1);
    let cmp = ast.node(ast.node(wheres[0]).children[0]);
    assert_eq!(cmp.kind, NodeKind::Comparison);
    assert_eq!(cmp.attr("op"), Some("="));
    let col = ast.node(cmp.children[0]);
    let lit = ast.node(cmp.children[1]);
    assert_eq!((col.attr("table"), col.attr("name")), (Some("e"), Some("status")));
    assert_eq!(lit.attr("value"), Some("Completed"));
}

#[test]
fn select_one() {
    let ast = parse("SELECT 1");
    let root = ast.node(ast.root());
    assert_eq!(root.span, Span::new(0, 1));
    let sel = ast.node(root.children[0]);
    assert_eq!(sel.kind, NodeKind::SelectClause);
    assert_eq!(sel.children.len(), 1);
    assert_eq!(ast.node(sel.children[0]).kind, NodeKind::Literal);
    assert_eq!(flatten_ast(&ast), "SELECT 1");
}

#[test]
fn select_from_error_position() {
    let err = parse_sql("SELECT FROM", Dialect::Sqlite).unwrap_err();
    assert_eq!(err.position, 1);
}

#[test]
fn empty_input_is_error() {
    assert!(parse_sql("  -- nothing\n", Dialect::Sqlite).is_err());
}

#[test]
fn dialect_names() {
    assert_eq!("SQLite".parse::<Dialect>().unwrap(), Dialect::Sqlite);
    assert!("postgres".parse::<Dialect>().is_err());
}

#[test]
fn flatten_round_trips_running_example() {
    let ast = parse(FIG6_GOLD);
    assert_eq!(flatten_ast(&ast), FIG6_GOLD);
    let spaced = parse("select  s.name\nFROM student s join enrollment e on s.id=e.student_id where e.status='Completed'");
    assert_eq!(flatten_ast(&spaced), FIG6_GOLD);
}

#[test]
fn enclosing_subtree_widens_to_where_clause() {
    let ast = parse("SELECT s.name FROM student s JOIN enrollment e ON s.id = e.student_id WHERE e.status = 'Complete'");
    let lit = ast
        .nodes()
        .iter()
        .find(|n| n.kind == NodeKind::Literal)
        .unwrap()
        .id;
    let frag = ast.minimal_enclosing_subtree(&BTreeSet::from([lit])).unwrap();
    let root = frag.root.unwrap();
    assert_eq!(ast.node(root).kind, NodeKind::WhereClause);
    assert_eq!(frag.render(&ast), "WHERE e.status = 'Complete'");
    assert_eq!(frag.nodes.len(), 4);

    let whole = ast.minimal_enclosing_subtree(&BTreeSet::from([ast.root()])).unwrap();
    assert_eq!(whole.nodes.len(), ast.nodes().len());
    assert!(ast.minimal_enclosing_subtree(&BTreeSet::new()).unwrap().is_empty());
    assert_eq!(
        ast.minimal_enclosing_subtree(&BTreeSet::from([NodeId(999)])),
        Err(AstError::UnknownNode(NodeId(999)))
    );
}

#[test]
fn schema_references() {
    let ast = parse("SELECT s.name FROM student s JOIN enrollment e ON s.id = e.student_id WHERE e.status = 'Complete'");
    let refs = collect_schema_references(&ast);
    let lit = refs.iter().find(|r| r.kind == RefKind::Literal).unwrap();
    assert_eq!(lit.name, "Complete");
    let ctx = lit.predicate_context.as_ref().unwrap();
    assert_eq!(ctx.column_display(), "enrollment.status");
    assert_eq!(ctx.op, "=");

    assert!(collect_schema_references(&parse("SELECT 1")).is_empty());

    let simple: Vec<_> = collect_schema_references(&parse("SELECT name FROM student"))
        .into_iter()
        .map(|r| (r.kind, r.name))
        .collect();
    assert_eq!(
        simple,
        vec![(RefKind::Table, "student".to_string()), (RefKind::Column, "name".to_string())]
    );
}

#[test]
fn compound_and_subqueries_round_trip() {
    for sql in [
        "SELECT a FROM t UNION ALL SELECT b FROM u ORDER BY 1 DESC LIMIT 3",
        "SELECT COUNT(DISTINCT x), MAX(y) FROM t WHERE z IN (SELECT z FROM u WHERE u.k > 2) GROUP BY w HAVING COUNT(*) > 1",
        "SELECT CASE WHEN a > 1 THEN 'x' ELSE 'y' END AS c FROM t",
        "SELECT CAST(a AS REAL) / b FROM t WHERE NOT EXISTS (SELECT 1 FROM u) AND (a = 1 OR b = 2)",
        "SELECT * FROM t AS x LEFT JOIN (SELECT id FROM u) AS y ON x.id = y.id LIMIT 5 OFFSET 2;",
        "SELECT a - -5, -b, \"col\" FROM `tbl` WHERE c BETWEEN 1 AND 2 AND d NOT LIKE '%x%' AND e IS NOT NULL",
    ] {
        let a = parse(sql);
        let flat = flatten_ast(&a);
        let b = parse(&flat);
        assert!(a.structurally_equal(&b), "{sql} -> {flat}");
        assert_eq!(flat, sql);
    }
}

#[test]
fn spans_nest() {
    let ast = parse("SELECT a, (b + c) * 2 FROM t WHERE x IN (1, 2) ORDER BY a DESC;");
    let root = ast.node(ast.root());
    assert_eq!(root.span, Span::new(0, ast.source_tokens().len() - 1));
    for n in ast.nodes() {
        for pair in n.children.windows(2) {
            assert!(ast.node(pair[0]).span.end < ast.node(pair[1]).span.start);
        }
        for c in &n.children {
            assert!(n.span.contains(&ast.node(*c).span));
        }
    }
}
