use std::path::Path;

use rusqlite::{Connection, OpenFlags};
use serde::{Deserialize, Serialize};

use super::SchemaError;
use crate::value::Value;

pub const DEFAULT_EXAMPLE_COUNT: usize = 3;
pub const DEFAULT_LOOKUP_LIMIT: usize = 10_000;

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ColumnId {
    pub table: String,
    pub column: String,
}

impl ColumnId {
    pub fn new(table: impl Into<String>, column: impl Into<String>) -> Self {
        ColumnId {
            table: table.into(),
            column: column.into(),
        }
    }
}

impl std::fmt::Display for ColumnId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}.{}", self.table, self.column)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table {
    pub name: String,
    pub description: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Column {
    pub table: String,
    pub name: String,
    pub declared_type: String,
    pub description: Option<String>,
    pub primary_key: bool,
    pub examples: Vec<Value>,
}

impl Column {
    pub fn id(&self) -> ColumnId {
        ColumnId::new(&self.table, &self.name)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EdgeKind {
    HasColumn,
    PrimaryKeyOf,
    ForeignKeyTo,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum SchemaNode {
    Table { name: String },
    Column { table: String, column: String },
}

impl SchemaNode {
    pub fn column(id: &ColumnId) -> Self {
        SchemaNode::Column {
            table: id.table.clone(),
            column: id.column.clone(),
        }
    }

    pub fn table(name: &str) -> Self {
        SchemaNode::Table {
            name: name.to_string(),
        }
    }

    pub fn table_name(&self) -> &str {
        match self {
            SchemaNode::Table { name } => name,
            SchemaNode::Column { table, .. } => table,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct SchemaEdge {
    pub kind: EdgeKind,
    pub from: SchemaNode,
    pub to: SchemaNode,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SchemaGraph {
    pub db_id: String,
    pub tables: Vec<Table>,
    pub columns: Vec<Column>,
    pub edges: Vec<SchemaEdge>,
}

impl SchemaGraph {
    pub fn table(&self, name: &str) -> Option<&Table> {
        self.tables.iter().find(|t| t.name.eq_ignore_ascii_case(name))
    }

    pub fn has_table(&self, name: &str) -> bool {
        self.table(name).is_some()
    }

    pub fn column(&self, table: &str, name: &str) -> Option<&Column> {
        self.columns
            .iter()
            .find(|c| c.table.eq_ignore_ascii_case(table) && c.name.eq_ignore_ascii_case(name))
    }

    pub fn columns_of(&self, table: &str) -> Vec<&Column> {
        self.columns
            .iter()
            .filter(|c| c.table.eq_ignore_ascii_case(table))
            .collect()
    }

    /// Tables that declare a column with this name.
    pub fn tables_with_column(&self, name: &str) -> Vec<&str> {
        self.columns
            .iter()
            .filter(|c| c.name.eq_ignore_ascii_case(name))
            .map(|c| c.table.as_str())
            .collect()
    }

    pub fn primary_keys(&self, table: &str) -> Vec<&Column> {
        self.columns_of(table).into_iter().filter(|c| c.primary_key).collect()
    }

    /// Foreign keys as (referencing column, referenced column).
    pub fn foreign_keys(&self) -> Vec<(ColumnId, ColumnId)> {
        let mut out = Vec::new();
        for e in &self.edges {
            if e.kind != EdgeKind::ForeignKeyTo {
                continue;
            }
            if let (
                SchemaNode::Column { table: ft, column: fc },
                SchemaNode::Column { table: tt, column: tc },
            ) = (&e.from, &e.to)
            {
                let pair = (ColumnId::new(ft, fc), ColumnId::new(tt, tc));
                let rev = (pair.1.clone(), pair.0.clone());
                if !out.contains(&rev) {
                    out.push(pair);
                }
            }
        }
        out
    }

    pub fn count_edges(&self, kind: EdgeKind) -> usize {
        self.edges.iter().filter(|e| e.kind == kind).count()
    }

    /// Canonical spelling of a table name.
    pub fn canonical_table(&self, name: &str) -> Option<&str> {
        self.table(name).map(|t| t.name.as_str())
    }

    /// Restrict the graph to the given tables and columns. Edges survive only
    /// when both endpoints are retained.
    pub fn project(&self, tables: &[String], columns: &[ColumnId]) -> SchemaGraph {
        let keep_table = |t: &str| tables.iter().any(|x| x.eq_ignore_ascii_case(t));
        let keep_col = |t: &str, c: &str| {
            columns
                .iter()
                .any(|x| x.table.eq_ignore_ascii_case(t) && x.column.eq_ignore_ascii_case(c))
        };
        let keep_node = |n: &SchemaNode| match n {
            SchemaNode::Table { name } => keep_table(name),
            SchemaNode::Column { table, column } => keep_table(table) && keep_col(table, column),
        };
        SchemaGraph {
            db_id: self.db_id.clone(),
            tables: self.tables.iter().filter(|t| keep_table(&t.name)).cloned().collect(),
            columns: self
                .columns
                .iter()
                .filter(|c| keep_table(&c.table) && keep_col(&c.table, &c.name))
                .cloned()
                .collect(),
            edges: self
                .edges
                .iter()
                .filter(|e| keep_node(&e.from) && keep_node(&e.to))
                .cloned()
                .collect(),
        }
    }
}

/// Open a database read-only.
pub fn open_readonly(path: &Path) -> Result<Connection, SchemaError> {
    if !path.is_file() {
        return Err(SchemaError::Io(format!("{}: no such file", path.display())));
    }
    let conn = Connection::open_with_flags(
        path,
        OpenFlags::SQLITE_OPEN_READ_ONLY | OpenFlags::SQLITE_OPEN_NO_MUTEX,
    )
    .map_err(|e| SchemaError::Io(format!("{}: {e}", path.display())))?;
    Ok(conn)
}

fn corrupt(e: rusqlite::Error) -> SchemaError {
    SchemaError::CorruptDatabase(e.to_string())
}

pub(crate) fn quote_name(name: &str) -> String {
    format!("\"{}\"", name.replace('"', "\"\""))
}

pub fn introspect_schema(db_path: &Path) -> Result<SchemaGraph, SchemaError> {
    let conn = open_readonly(db_path)?;
    let db_id = db_path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    introspect_connection(&conn, &db_id, DEFAULT_EXAMPLE_COUNT)
}

pub(crate) fn introspect_connection(
    conn: &Connection,
    db_id: &str,
    examples: usize,
) -> Result<SchemaGraph, SchemaError> {
    let mut stmt = conn
        .prepare(
            "SELECT name FROM sqlite_master WHERE type = 'table' AND name NOT LIKE 'sqlite_%' ORDER BY rowid",
        )
        .map_err(corrupt)?;
    let names: Vec<String> = stmt
        .query_map([], |r| r.get(0))
        .map_err(corrupt)?
        .collect::<Result<_, _>>()
        .map_err(corrupt)?;

    let mut graph = SchemaGraph {
        db_id: db_id.to_string(),
        ..Default::default()
    };
    for name in &names {
        graph.tables.push(Table {
            name: name.clone(),
            description: None,
        });
        let mut info = conn
            .prepare(&format!("PRAGMA table_info({})", quote_name(name)))
            .map_err(corrupt)?;
        let cols: Vec<(String, String, i64)> = info
            .query_map([], |r| Ok((r.get(1)?, r.get::<_, Option<String>>(2)?.unwrap_or_default(), r.get(5)?)))
            .map_err(corrupt)?
            .collect::<Result<_, _>>()
            .map_err(corrupt)?;
        for (col, ty, pk) in cols {
            let sample = distinct_values(conn, name, &col, examples).map_err(corrupt)?;
            graph.edges.push(SchemaEdge {
                kind: EdgeKind::HasColumn,
                from: SchemaNode::table(name),
                to: SchemaNode::column(&ColumnId::new(name, &col)),
            });
            if pk > 0 {
                graph.edges.push(SchemaEdge {
                    kind: EdgeKind::PrimaryKeyOf,
                    from: SchemaNode::column(&ColumnId::new(name, &col)),
                    to: SchemaNode::table(name),
                });
            }
            graph.columns.push(Column {
                table: name.clone(),
                name: col,
                declared_type: ty,
                description: None,
                primary_key: pk > 0,
                examples: sample,
            });
        }
    }

    for name in &names {
        let mut fk = conn
            .prepare(&format!("PRAGMA foreign_key_list({})", quote_name(name)))
            .map_err(corrupt)?;
        let rows: Vec<(String, String, Option<String>)> = fk
            .query_map([], |r| Ok((r.get(2)?, r.get(3)?, r.get(4)?)))
            .map_err(corrupt)?
            .collect::<Result<_, _>>()
            .map_err(corrupt)?;
        for (parent, from, to) in rows {
            let Some(parent_table) = graph.canonical_table(&parent).map(str::to_string) else {
                continue;
            };
            let target = match to {
                Some(t) => t,
                None => match graph.primary_keys(&parent_table).first() {
                    Some(c) => c.name.clone(),
                    None => continue,
                },
            };
            let Some(target_col) = graph.column(&parent_table, &target).map(|c| c.id()) else {
                continue;
            };
            let src = ColumnId::new(name, &from);
            graph.edges.push(SchemaEdge {
                kind: EdgeKind::ForeignKeyTo,
                from: SchemaNode::column(&src),
                to: SchemaNode::column(&target_col),
            });
            graph.edges.push(SchemaEdge {
                kind: EdgeKind::ForeignKeyTo,
                from: SchemaNode::column(&target_col),
                to: SchemaNode::column(&src),
            });
        }
    }
    Ok(graph)
}

fn distinct_values(
    conn: &Connection,
    table: &str,
    column: &str,
    limit: usize,
) -> rusqlite::Result<Vec<Value>> {
    let sql = format!(
        "SELECT DISTINCT {c} FROM {t} WHERE {c} IS NOT NULL ORDER BY {c} LIMIT {limit}",
        c = quote_name(column),
        t = quote_name(table),
    );
    let mut stmt = conn.prepare(&sql)?;
    let rows = stmt.query_map([], |r| Ok(Value::from_ref(r.get_ref(0)?)))?;
    rows.collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValueSet {
    pub values: Vec<Value>,
    pub truncated: bool,
}

impl ValueSet {
    /// Whether the domain is complete enough to assert non-membership.
    pub fn is_assertable(&self) -> bool {
        !self.truncated
    }
}

/// Distinct non-null values of a column in ascending order, capped at
/// `limit`.
pub fn lookup_values(column: &ColumnId, conn: &Connection, limit: usize) -> Result<ValueSet, SchemaError> {
    let exists: bool = conn
        .prepare(&format!("PRAGMA table_info({})", quote_name(&column.table)))
        .and_then(|mut s| {
            let names: Vec<String> = s.query_map([], |r| r.get(1))?.collect::<Result<_, _>>()?;
            Ok(names.iter().any(|n| n.eq_ignore_ascii_case(&column.column)))
        })
        .map_err(corrupt)?;
    if !exists {
        return Err(SchemaError::UnknownColumn(column.to_string()));
    }
    let mut values = distinct_values(conn, &column.table, &column.column, limit + 1).map_err(corrupt)?;
    let truncated = values.len() > limit;
    values.truncate(limit);
    Ok(ValueSet { values, truncated })
}
