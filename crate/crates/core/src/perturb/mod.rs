//! Execution-verified error injection by AST perturbation.

mod ops;
mod values;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rusqlite::Connection;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ast::{parse_sql, NodeId, NodeKind, SqlAst};
use crate::exec::{exec_equivalent, execute_on, ExecOutcome};
use crate::schema::SchemaGraph;
use crate::taxonomy::{ErrorLabelSet, ErrorType, LocalizationBlock};

pub use values::{variants, Variant};

/// Verification timeout for a single perturbed query.
pub const DEFAULT_VERIFY_TIMEOUT_MS: u64 = 10_000;

/// One edit: the node it was applied to (in the tree the operator ran on)
/// and the rendered text before and after. Empty text means absent.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MutationEntry {
    pub node: NodeId,
    pub before: String,
    pub after: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PerturbStatus {
    Applied,
    Inapplicable,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerturbationOutcome {
    pub status: PerturbStatus,
    pub perturbed_sql: Option<String>,
    #[serde(skip)]
    pub perturbed_ast: Option<SqlAst>,
    pub injected_labels: ErrorLabelSet,
    pub mutation_log: Vec<MutationEntry>,
    /// Ground-truth localization of each injected error.
    pub localizations: Vec<LocalizationBlock>,
}

impl PerturbationOutcome {
    pub fn inapplicable() -> Self {
        PerturbationOutcome {
            status: PerturbStatus::Inapplicable,
            perturbed_sql: None,
            perturbed_ast: None,
            injected_labels: ErrorLabelSet::NoError,
            mutation_log: Vec::new(),
            localizations: Vec::new(),
        }
    }

    pub fn is_applied(&self) -> bool {
        self.status == PerturbStatus::Applied
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PerturbError {
    #[error("database unreadable: {0}")]
    ExecutionError(String),
    #[error("{0} and {1} are not composable")]
    IncompatiblePair(ErrorType, ErrorType),
    #[error("composition needs two distinct labels, got {0} twice")]
    DuplicateLabel(ErrorType),
}

/// Whether two operators may be composed (in either order).
pub fn compatible(a: ErrorType, b: ErrorType) -> bool {
    use ErrorType::*;
    if a == b || a == TableMismatch || b == TableMismatch {
        return false;
    }
    let pair = |x, y| (a == x && b == y) || (a == y && b == x);
    !(pair(AttributeRedundancy, AttributeMissing) || pair(TableRedundancy, TableMissing))
}

/// Every ordered composable pair.
pub fn compatible_pairs() -> Vec<(ErrorType, ErrorType)> {
    let mut out = Vec::new();
    for a in ErrorType::ALL {
        for b in ErrorType::ALL {
            if compatible(a, b) {
                out.push((a, b));
            }
        }
    }
    out
}

struct Applied {
    ast: SqlAst,
    sql: String,
    outcome: ExecOutcome,
    entries: Vec<MutationEntry>,
    block: LocalizationBlock,
}

pub struct Perturber<'a> {
    schema: &'a SchemaGraph,
    conn: &'a Connection,
    timeout_ms: u64,
}

impl<'a> Perturber<'a> {
    pub fn new(schema: &'a SchemaGraph, conn: &'a Connection) -> Self {
        Perturber {
            schema,
            conn,
            timeout_ms: DEFAULT_VERIFY_TIMEOUT_MS,
        }
    }

    pub fn with_timeout(mut self, timeout_ms: u64) -> Self {
        self.timeout_ms = timeout_ms;
        self
    }

    fn check_readable(&self) -> Result<(), PerturbError> {
        self.conn
            .query_row("SELECT COUNT(*) FROM sqlite_master", [], |r| r.get::<_, i64>(0))
            .map(|_| ())
            .map_err(|e| PerturbError::ExecutionError(e.to_string()))
    }

    fn verify(&self, label: ErrorType, out: &ExecOutcome, reference: &ExecOutcome, ordered: bool) -> bool {
        if !reference.is_rows() {
            return false;
        }
        if label == ErrorType::TableMismatch {
            return matches!(out, ExecOutcome::Error { .. });
        }
        out.is_rows() && !exec_equivalent(reference, out, ordered)
    }

    /// First verified candidate over sites in seeded random order.
    fn apply(
        &self,
        label: ErrorType,
        ast: &SqlAst,
        refs: &[&ExecOutcome],
        ordered: bool,
        rng: &mut ChaCha8Rng,
    ) -> Option<Applied> {
        let cx = ops::OpCtx {
            ast,
            schema: self.schema,
            conn: self.conn,
        };
        let mut sites = ops::sites(label, &cx, rng);
        sites.shuffle(rng);
        for site in sites {
            for cand in site {
                let Ok(new_ast) = parse_sql(&cand.sql, ast.dialect()) else {
                    continue;
                };
                let out = execute_on(self.conn, &cand.sql, self.timeout_ms);
                if refs.iter().all(|r| self.verify(label, &out, r, ordered)) {
                    return Some(Applied {
                        ast: new_ast,
                        sql: cand.sql,
                        outcome: out,
                        entries: cand.entries,
                        block: cand.block,
                    });
                }
            }
        }
        None
    }

    fn original(&self, ast: &SqlAst) -> (ExecOutcome, bool) {
        let sql = ast.render(ast.root());
        let ordered = ast.child_of_kind(ast.root(), NodeKind::OrderBy).is_some();
        (execute_on(self.conn, &sql, self.timeout_ms), ordered)
    }

    /// Inject one error of type `label`, verified by an execution difference.
    pub fn perturb(&self, ast: &SqlAst, label: ErrorType, seed: u64) -> Result<PerturbationOutcome, PerturbError> {
        self.check_readable()?;
        let (orig, ordered) = self.original(ast);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Ok(match self.apply(label, ast, &[&orig], ordered, &mut rng) {
            Some(a) => PerturbationOutcome {
                status: PerturbStatus::Applied,
                perturbed_sql: Some(a.sql),
                perturbed_ast: Some(a.ast),
                injected_labels: ErrorLabelSet::single(label),
                mutation_log: a.entries,
                localizations: vec![a.block],
            },
            None => PerturbationOutcome::inapplicable(),
        })
    }

    /// Apply `labels.0` then `labels.1`; each step and the final result must
    /// change execution.
    pub fn compose(
        &self,
        ast: &SqlAst,
        labels: (ErrorType, ErrorType),
        seed: u64,
    ) -> Result<PerturbationOutcome, PerturbError> {
        let (a, b) = labels;
        if a == b {
            return Err(PerturbError::DuplicateLabel(a));
        }
        if !compatible(a, b) {
            return Err(PerturbError::IncompatiblePair(a, b));
        }
        self.check_readable()?;
        let (orig, ordered) = self.original(ast);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let Some(first) = self.apply(a, ast, &[&orig], ordered, &mut rng) else {
            return Ok(PerturbationOutcome::inapplicable());
        };
        let Some(second) = self.apply(b, &first.ast, &[&first.outcome, &orig], ordered, &mut rng) else {
            return Ok(PerturbationOutcome::inapplicable());
        };
        let mut log = first.entries;
        log.extend(second.entries);
        Ok(PerturbationOutcome {
            status: PerturbStatus::Applied,
            perturbed_sql: Some(second.sql),
            perturbed_ast: Some(second.ast),
            injected_labels: ErrorLabelSet::from_labels([a, b]),
            mutation_log: log,
            localizations: vec![first.block, second.block],
        })
    }
}

pub fn perturb(
    ast: &SqlAst,
    schema: &SchemaGraph,
    conn: &Connection,
    label: ErrorType,
    seed: u64,
) -> Result<PerturbationOutcome, PerturbError> {
    Perturber::new(schema, conn).perturb(ast, label, seed)
}

pub fn compose(
    ast: &SqlAst,
    schema: &SchemaGraph,
    conn: &Connection,
    labels: (ErrorType, ErrorType),
    seed: u64,
) -> Result<PerturbationOutcome, PerturbError> {
    Perturber::new(schema, conn).compose(ast, labels, seed)
}
