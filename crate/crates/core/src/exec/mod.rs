//! Read-only SQL execution, result equivalence and evaluation metrics.

mod metrics;

use std::cmp::Ordering;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use rusqlite::{Connection, ErrorCode};
use serde::{Deserialize, Serialize};

use crate::schema::{open_readonly, SchemaError};
use crate::value::Value;

pub use metrics::{
    compute_metrics, delta_ex, f1, implied_fp_cr, DetectionScores, EvalReport, MetricsError, SampleRecord, TsaEntry,
};

pub const DEFAULT_TIMEOUT_MS: u64 = 30_000;
pub const FLOAT_REL_TOL: f64 = 1e-6;

pub type Row = Vec<Value>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum ExecOutcome {
    Rows { rows: Vec<Row>, elapsed_ms: u64 },
    Error { message: String, elapsed_ms: u64 },
    Timeout { elapsed_ms: u64 },
}

impl ExecOutcome {
    pub fn is_rows(&self) -> bool {
        matches!(self, ExecOutcome::Rows { .. })
    }

    pub fn is_failure(&self) -> bool {
        !self.is_rows()
    }

    pub fn rows(&self) -> Option<&[Row]> {
        match self {
            ExecOutcome::Rows { rows, .. } => Some(rows),
            _ => None,
        }
    }

    pub fn error_message(&self) -> Option<&str> {
        match self {
            ExecOutcome::Error { message, .. } => Some(message),
            ExecOutcome::Timeout { .. } => Some("query timed out"),
            ExecOutcome::Rows { .. } => None,
        }
    }

    pub fn elapsed_ms(&self) -> u64 {
        match self {
            ExecOutcome::Rows { elapsed_ms, .. }
            | ExecOutcome::Error { elapsed_ms, .. }
            | ExecOutcome::Timeout { elapsed_ms } => *elapsed_ms,
        }
    }

    /// Short human-readable rendering with at most `limit` rows.
    pub fn preview(&self, limit: usize) -> String {
        match self {
            ExecOutcome::Rows { rows, .. } if rows.is_empty() => "empty result set".to_string(),
            ExecOutcome::Rows { rows, .. } => {
                let mut out = format!("{} row(s)", rows.len());
                for r in rows.iter().take(limit) {
                    let cells: Vec<String> = r.iter().map(|v| v.to_sql_literal()).collect();
                    out.push_str(&format!("\n({})", cells.join(", ")));
                }
                if rows.len() > limit {
                    out.push_str("\n...");
                }
                out
            }
            ExecOutcome::Error { message, .. } => format!("error: {message}"),
            ExecOutcome::Timeout { elapsed_ms } => format!("timeout after {elapsed_ms} ms"),
        }
    }
}

/// Database file for `db_id` below `root`: `root/<db>/<db>.sqlite`, falling
/// back to `root/<db>.sqlite`.
pub fn database_path(root: &Path, db_id: &str) -> PathBuf {
    let nested = root.join(db_id).join(format!("{db_id}.sqlite"));
    if nested.is_file() {
        return nested;
    }
    let flat = root.join(format!("{db_id}.sqlite"));
    if flat.is_file() {
        flat
    } else {
        nested
    }
}

/// Open a connection that refuses writes.
pub fn open_query_only(db: &Path) -> Result<Connection, SchemaError> {
    let conn = open_readonly(db)?;
    conn.pragma_update(None, "query_only", true)
        .map_err(|e| SchemaError::CorruptDatabase(e.to_string()))?;
    Ok(conn)
}

pub fn execute(sql: &str, db: &Path, timeout_ms: u64) -> ExecOutcome {
    match open_query_only(db) {
        Ok(conn) => execute_on(&conn, sql, timeout_ms),
        Err(e) => ExecOutcome::Error {
            message: e.to_string(),
            elapsed_ms: 0,
        },
    }
}

pub fn execute_on(conn: &Connection, sql: &str, timeout_ms: u64) -> ExecOutcome {
    let start = Instant::now();
    let deadline = start + Duration::from_millis(timeout_ms);
    conn.progress_handler(1000, Some(move || Instant::now() >= deadline));
    let result = run(conn, sql);
    conn.progress_handler(0, None::<fn() -> bool>);
    let elapsed_ms = start.elapsed().as_millis() as u64;
    match result {
        Ok(rows) => ExecOutcome::Rows { rows, elapsed_ms },
        Err(rusqlite::Error::SqliteFailure(e, _)) if e.code == ErrorCode::OperationInterrupted => {
            ExecOutcome::Timeout { elapsed_ms }
        }
        Err(e) => ExecOutcome::Error {
            message: e.to_string(),
            elapsed_ms,
        },
    }
}

fn run(conn: &Connection, sql: &str) -> rusqlite::Result<Vec<Row>> {
    let mut stmt = conn.prepare(sql)?;
    if !stmt.readonly() {
        return Err(rusqlite::Error::SqliteFailure(
            rusqlite::ffi::Error::new(rusqlite::ffi::SQLITE_READONLY),
            Some("statement is not read-only".into()),
        ));
    }
    let width = stmt.column_count();
    let mut rows = stmt.query([])?;
    let mut out = Vec::new();
    while let Some(r) = rows.next()? {
        out.push((0..width).map(|i| r.get_ref(i).map(Value::from_ref)).collect::<Result<Row, _>>()?);
    }
    Ok(out)
}

fn cmp_rows(a: &Row, b: &Row) -> Ordering {
    for (x, y) in a.iter().zip(b) {
        match x.total_cmp(y) {
            Ordering::Equal => continue,
            o => return o,
        }
    }
    a.len().cmp(&b.len())
}

fn rows_match(a: &Row, b: &Row) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| x.approx_eq(y, FLOAT_REL_TOL))
}

/// Result equivalence: both outcomes are rows and the rows agree as
/// multisets (or as sequences when `order_sensitive`). Failures are never
/// equivalent to anything.
pub fn exec_equivalent(a: &ExecOutcome, b: &ExecOutcome, order_sensitive: bool) -> bool {
    let (Some(ra), Some(rb)) = (a.rows(), b.rows()) else {
        return false;
    };
    if ra.len() != rb.len() {
        return false;
    }
    if order_sensitive {
        return ra.iter().zip(rb).all(|(x, y)| rows_match(x, y));
    }
    let mut sa: Vec<&Row> = ra.iter().collect();
    let mut sb: Vec<&Row> = rb.iter().collect();
    sa.sort_by(|x, y| cmp_rows(x, y));
    sb.sort_by(|x, y| cmp_rows(x, y));
    sa.iter().zip(&sb).all(|(x, y)| rows_match(x, y))
}

/// Whether comparisons against this gold query should respect row order.
pub fn gold_is_ordered(gold_sql: &str) -> bool {
    crate::ast::parse_sql(gold_sql, crate::ast::Dialect::Sqlite)
        .map(|ast| {
            ast.child_of_kind(ast.root(), crate::ast::NodeKind::OrderBy)
                .is_some()
        })
        .unwrap_or(false)
}
