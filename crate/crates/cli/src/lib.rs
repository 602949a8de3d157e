//! Batch commands behind the `sqlrefine` binary.

pub mod config;

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::Serialize;
use sqlrefine::ast::{parse_sql, Dialect};
use sqlrefine::backend::{make_oracle, Backend, FailingBackend, FixedResponder, HttpBackend, OracleFixture, Role};
use sqlrefine::corpus::{read_jsonl, write_jsonl, CorpusRow, Sample};
use sqlrefine::db::{Database, DatabaseCache};
use sqlrefine::detect::{static_detect, DetectionReport};
use sqlrefine::exec::{compute_metrics, execute_on, EvalReport, MetricsError};
use sqlrefine::pipeline::{
    detect_sample, for_each_sample, refine_detected, run_pipeline, score_records, Backends, PipelineRecord,
    PipelineStatus, RefinementReport,
};
use sqlrefine::refine::ExampleStore;
use sqlrefine::schema::{build_qss, introspect_schema, serialize_mschema};
use sqlrefine::synth::{synthesize_dataset, CompositionReport, SynthError, SynthSample};
use sqlrefine::taxonomy::{export_resources, ErrorLabelSet};

pub use config::{BackendSpec, BackendsConfig, RunConfig};

pub const DATASET_FILE: &str = "dataset.jsonl";
pub const COMPOSITION_FILE: &str = "composition.json";
pub const DETECTION_FILE: &str = "detection.jsonl";
pub const REFINEMENT_FILE: &str = "refinement.jsonl";
pub const EVAL_FILE: &str = "eval.json";
pub const SUMMARY_FILE: &str = "summary.txt";

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("i/o error: {0}")]
    Io(String),
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Runtime(_) => 1,
            CliError::Config(_) | CliError::Io(_) => 2,
        }
    }
}

fn io_err(path: &Path) -> impl Fn(std::io::Error) -> CliError + '_ {
    move |e| CliError::Io(format!("{}: {e}", path.display()))
}

/// Samples to process, with whatever ground truth the input carries.
#[derive(Debug, Clone, Default)]
pub struct Dataset {
    pub samples: Vec<Sample>,
    /// Injected labels of synthesized rows, keyed by sample id.
    pub gold_labels: BTreeMap<String, ErrorLabelSet>,
    pub fixtures: Vec<OracleFixture>,
}

/// Read corpus rows and synthesized samples (told apart by `sample_id`).
pub fn load_dataset(path: &Path) -> Result<Dataset, CliError> {
    let rows: Vec<serde_json::Value> = read_jsonl(path).map_err(|e| CliError::Config(e.to_string()))?;
    let mut data = Dataset::default();
    let mut seen = BTreeSet::new();
    for (i, v) in rows.into_iter().enumerate() {
        let bad = |e: serde_json::Error| CliError::Config(format!("{}:{}: {e}", path.display(), i + 1));
        let sample = if v.get("sample_id").is_some() {
            let s: SynthSample = serde_json::from_value(v).map_err(bad)?;
            data.gold_labels.insert(s.sample_id.clone(), s.labels.clone());
            data.fixtures.push(s.oracle_fixture());
            s.to_sample()
        } else {
            Sample::from_row(&serde_json::from_value::<CorpusRow>(v).map_err(bad)?)
        };
        if !seen.insert(sample.question_id.clone()) {
            return Err(CliError::Config(format!("duplicate sample id {}", sample.question_id)));
        }
        data.samples.push(sample);
    }
    Ok(data)
}

/// Oracle ground truth for plain corpus rows: the gold query, and the labels
/// the static rules find in the prediction.
pub fn corpus_fixtures(rows: &[CorpusRow], dbs: &DatabaseCache, timeout_ms: u64) -> Vec<OracleFixture> {
    rows.iter()
        .map(|r| OracleFixture {
            sample_id: r.question_id.clone(),
            gold_sql: Some(r.gold_sql.clone()),
            labels: rule_labels(r, dbs, timeout_ms),
            localizations: Vec::new(),
        })
        .collect()
}

fn rule_labels(r: &CorpusRow, dbs: &DatabaseCache, timeout_ms: u64) -> ErrorLabelSet {
    let (Some(pred), Ok(db)) = (&r.predicted_sql, dbs.get(&r.db_id)) else {
        return ErrorLabelSet::NoError;
    };
    let Ok(conn) = db.connect() else {
        return ErrorLabelSet::NoError;
    };
    let ast = parse_sql(pred, Dialect::Sqlite).ok();
    let fb = execute_on(&conn, pred, timeout_ms);
    static_detect(ast.as_ref(), &db.schema, Some(&conn), &fb)
}

fn build_backend(
    cfg: &RunConfig,
    spec: &BackendSpec,
    role: Role,
    fixtures: &dyn Fn() -> Vec<OracleFixture>,
) -> Result<Arc<dyn Backend>, CliError> {
    let role_name = serde_json::to_value(role).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default();
    Ok(match spec {
        BackendSpec::Http(c) => {
            Arc::new(HttpBackend::new(role_name, c.clone()).map_err(|e| CliError::Config(e.to_string()))?)
        }
        BackendSpec::Fixed { response } => Arc::new(FixedResponder::new(response.clone())),
        BackendSpec::Failing { max_retries } => Arc::new(FailingBackend::new(*max_retries)),
        BackendSpec::Oracle { fixtures: path } => {
            let fx = match path {
                Some(p) => read_jsonl(&cfg.resolve(p)).map_err(|e| CliError::Config(e.to_string()))?,
                None => fixtures(),
            };
            let o = make_oracle(&fx).map_err(|e| CliError::Config(e.to_string()))?;
            match role {
                Role::Detector => o.detector,
                Role::Localizer => o.localizer,
                Role::Refiner => o.refiner,
                Role::Assistant => o.assistant,
            }
        }
    })
}

fn required(
    cfg: &RunConfig,
    spec: &Option<BackendSpec>,
    role: Role,
    data: &Dataset,
) -> Result<Arc<dyn Backend>, CliError> {
    let spec = spec
        .as_ref()
        .ok_or_else(|| CliError::Config(format!("no {role:?} backend configured").to_lowercase()))?;
    build_backend(cfg, spec, role, &|| data.fixtures.clone())
}

struct Roles {
    detector: Arc<dyn Backend>,
    localizer: Arc<dyn Backend>,
    refiner: Arc<dyn Backend>,
}

impl Roles {
    fn load(cfg: &RunConfig, data: &Dataset) -> Result<Self, CliError> {
        let b = &cfg.backends;
        Ok(Roles {
            detector: required(cfg, &b.detector, Role::Detector, data)?,
            localizer: required(cfg, &b.localizer, Role::Localizer, data)?,
            refiner: required(cfg, &b.refiner, Role::Refiner, data)?,
        })
    }

    fn as_backends(&self) -> Backends<'_> {
        Backends {
            detector: self.detector.as_ref(),
            localizer: self.localizer.as_ref(),
            refiner: self.refiner.as_ref(),
        }
    }
}

fn example_store(cfg: &RunConfig) -> Result<ExampleStore, CliError> {
    match &cfg.examples {
        Some(p) => {
            let p = cfg.resolve(p);
            ExampleStore::load(&p).map_err(|e| CliError::Config(format!("{}: {e}", p.display())))
        }
        None => Ok(ExampleStore::builtin()),
    }
}

/// Run `f` on a pool sized by the config.
fn with_jobs<T: Send>(cfg: &RunConfig, f: impl FnOnce() -> T + Send) -> Result<T, CliError> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Some(n) = cfg.jobs {
        if n == 0 {
            return Err(CliError::Config("jobs must be at least 1".into()));
        }
        b = b.num_threads(n);
    }
    let pool = b.build().map_err(|e| CliError::Runtime(e.to_string()))?;
    Ok(pool.install(f))
}

fn out_dir(cfg: &RunConfig) -> Result<PathBuf, CliError> {
    let dir = cfg.out_path();
    std::fs::create_dir_all(&dir).map_err(io_err(&dir))?;
    Ok(dir)
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut s = serde_json::to_string_pretty(value).expect("serializable");
    s.push('\n');
    std::fs::write(path, s).map_err(io_err(path))
}

fn write_lines<T: Serialize>(path: &Path, rows: &[T]) -> Result<(), CliError> {
    write_jsonl(path, rows).map_err(io_err(path))
}

/// Schema of one database file, as m-schema text or graph JSON.
pub fn cmd_introspect(db_path: &Path, json: bool) -> Result<String, CliError> {
    let schema = introspect_schema(db_path).map_err(|e| CliError::Io(e.to_string()))?;
    if json {
        let mut s = serde_json::to_string_pretty(&schema).expect("serializable");
        s.push('\n');
        return Ok(s);
    }
    let qss = build_qss("", &schema, None, &[]).map_err(|e| CliError::Runtime(e.to_string()))?;
    Ok(serialize_mschema(&qss))
}

/// Synthesize a labelled dataset from the corpus; writes the dataset and its
/// composition report.
pub fn cmd_synth(cfg: &RunConfig) -> Result<CompositionReport, CliError> {
    let rows: Vec<CorpusRow> = read_jsonl(&cfg.corpus_path()).map_err(|e| CliError::Config(e.to_string()))?;
    let dbs = DatabaseCache::new(cfg.db_root_path());
    let assistant = match &cfg.backends.assistant {
        Some(spec) => Some(build_backend(cfg, spec, Role::Assistant, &|| {
            corpus_fixtures(&rows, &dbs, cfg.synthesis.timeout_ms)
        })?),
        None => {
            log::warn!("no assistant backend configured; the injection partition stays empty");
            None
        }
    };
    let mut sc = cfg.synthesis.clone();
    sc.seed = cfg.seed;
    let out = with_jobs(cfg, || synthesize_dataset(&rows, &dbs, &sc, assistant.as_deref()))?.map_err(|e| match e {
        SynthError::Config(m) => CliError::Config(m),
        other => CliError::Runtime(other.to_string()),
    })?;
    let dir = out_dir(cfg)?;
    write_lines(&dir.join(DATASET_FILE), &out.samples)?;
    write_json(&dir.join(COMPOSITION_FILE), &out.report)?;
    Ok(out.report)
}

/// Detection over every sample; writes the detection report.
pub fn cmd_detect(cfg: &RunConfig) -> Result<Vec<DetectionReport>, CliError> {
    let data = load_dataset(&cfg.corpus_path())?;
    let detector = required(cfg, &cfg.backends.detector, Role::Detector, &data)?;
    let dbs = DatabaseCache::new(cfg.db_root_path());
    let records = with_jobs(cfg, || {
        for_each_sample(&data.samples, &dbs, |_, s, db, conn| {
            detect_sample(s, db, Some(conn), detector.as_ref(), &cfg.pipeline)
        })
    })?;
    let reports: Vec<DetectionReport> = records.iter().map(PipelineRecord::detection_report).collect();
    write_lines(&out_dir(cfg)?.join(DETECTION_FILE), &reports)?;
    Ok(reports)
}

/// Refinement of flagged samples from an earlier detection report (the one
/// in the output directory by default).
pub fn cmd_refine(cfg: &RunConfig, detections: Option<&Path>) -> Result<Vec<RefinementReport>, CliError> {
    let data = load_dataset(&cfg.corpus_path())?;
    let default = cfg.out_path().join(DETECTION_FILE);
    let path = detections.unwrap_or(&default);
    let found: Vec<DetectionReport> = read_jsonl(path).map_err(|e| CliError::Config(e.to_string()))?;
    let by_id: BTreeMap<&str, &DetectionReport> = found.iter().map(|d| (d.question_id.as_str(), d)).collect();
    for s in &data.samples {
        if !by_id.contains_key(s.question_id.as_str()) {
            return Err(CliError::Config(format!("{} has no detection for {}", path.display(), s.question_id)));
        }
    }
    let roles = Roles::load(cfg, &data)?;
    let store = example_store(cfg)?;
    let dbs = DatabaseCache::new(cfg.db_root_path());
    let records = with_jobs(cfg, || {
        for_each_sample(&data.samples, &dbs, |_, s, db, conn| {
            let d = by_id[s.question_id.as_str()];
            match d.result() {
                Some(r) => refine_detected(s, db, Some(conn), r, roles.as_backends(), &cfg.pipeline, &store),
                None => failed_detection(s, d),
            }
        })
    })?;
    let reports: Vec<RefinementReport> = records.iter().map(PipelineRecord::refinement_report).collect();
    write_lines(&out_dir(cfg)?.join(REFINEMENT_FILE), &reports)?;
    Ok(reports)
}

fn failed_detection(s: &Sample, d: &DetectionReport) -> PipelineRecord {
    PipelineRecord {
        question_id: s.question_id.clone(),
        db_id: s.db_id.clone(),
        original_sql: s.sql.clone(),
        detection: None,
        final_labels: ErrorLabelSet::NoError,
        localizations: Vec::new(),
        refined_sql: s.sql.clone(),
        status: PipelineStatus::DetectionFailed,
        errors: d.error.iter().cloned().collect(),
    }
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub records: Vec<PipelineRecord>,
    pub eval: EvalReport,
    pub summary: String,
}

fn evaluate(cfg: &RunConfig, data: &Dataset, reports: &[RefinementReport]) -> Result<(EvalReport, String), CliError> {
    let dbs = DatabaseCache::new(cfg.db_root_path());
    let scored = with_jobs(cfg, || score_records(reports, &data.samples, &dbs, &data.gold_labels, &cfg.eval))?
        .map_err(|e| CliError::Runtime(e.to_string()))?;
    let eval = compute_metrics(&scored, data.samples.len()).map_err(|e| match e {
        MetricsError::InconsistentRecords { .. } => CliError::Runtime(e.to_string()),
        other => CliError::Config(other.to_string()),
    })?;
    let mut statuses: BTreeMap<String, usize> = BTreeMap::new();
    for r in reports {
        let name = serde_json::to_value(r.status).ok().and_then(|v| v.as_str().map(String::from));
        *statuses.entry(name.unwrap_or_default()).or_default() += 1;
    }
    let mut summary = eval.to_table();
    for (k, n) in statuses {
        summary.push_str(&format!("status {k}: {n}\n"));
    }
    let dir = out_dir(cfg)?;
    write_json(&dir.join(EVAL_FILE), &eval)?;
    std::fs::write(dir.join(SUMMARY_FILE), &summary).map_err(io_err(&dir))?;
    Ok((eval, summary))
}

/// Detection, refinement and evaluation of every sample.
pub fn cmd_run(cfg: &RunConfig) -> Result<RunOutput, CliError> {
    let data = load_dataset(&cfg.corpus_path())?;
    if let Some(s) = data.samples.iter().find(|s| s.gold_sql.is_none()) {
        return Err(CliError::Config(format!("sample {} has no gold query", s.question_id)));
    }
    let roles = Roles::load(cfg, &data)?;
    let store = example_store(cfg)?;
    let dbs = DatabaseCache::new(cfg.db_root_path());
    let records = with_jobs(cfg, || {
        for_each_sample(&data.samples, &dbs, |_, s, db: &Database, conn| {
            run_pipeline(s, db, Some(conn), roles.as_backends(), &cfg.pipeline, &store)
        })
    })?;
    let dir = out_dir(cfg)?;
    let detections: Vec<DetectionReport> = records.iter().map(PipelineRecord::detection_report).collect();
    write_lines(&dir.join(DETECTION_FILE), &detections)?;
    let reports: Vec<RefinementReport> = records.iter().map(PipelineRecord::refinement_report).collect();
    write_lines(&dir.join(REFINEMENT_FILE), &reports)?;
    let (eval, summary) = evaluate(cfg, &data, &reports)?;
    Ok(RunOutput { records, eval, summary })
}

/// Score a refinement report (the one in the output directory by default).
pub fn cmd_eval(cfg: &RunConfig, records: Option<&Path>) -> Result<(EvalReport, String), CliError> {
    let data = load_dataset(&cfg.corpus_path())?;
    let default = cfg.out_path().join(REFINEMENT_FILE);
    let path = records.unwrap_or(&default);
    let reports: Vec<RefinementReport> = read_jsonl(path).map_err(|e| CliError::Config(e.to_string()))?;
    evaluate(cfg, &data, &reports)
}

/// Write the taxonomy, external mapping and templates as JSON files.
pub fn cmd_taxonomy_export(dir: &Path) -> Result<Vec<PathBuf>, CliError> {
    export_resources(dir).map_err(io_err(dir))
}
