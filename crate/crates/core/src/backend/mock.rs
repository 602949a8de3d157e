use std::collections::BTreeMap;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{Backend, BackendError, CompletionRequest, RetryPolicy};
use crate::taxonomy::{render_blocks, ErrorLabelSet, ErrorType, LocalizationBlock};

/// Answers from a lookup table: by sample id, then request fingerprint,
/// then a default.
#[derive(Debug, Default)]
pub struct FixedResponder {
    default: Option<String>,
    by_sample: BTreeMap<String, String>,
    by_fingerprint: BTreeMap<String, String>,
    calls: AtomicUsize,
}

impl FixedResponder {
    pub fn new(default: impl Into<String>) -> Self {
        FixedResponder {
            default: Some(default.into()),
            ..Default::default()
        }
    }

    pub fn with_sample(mut self, id: impl Into<String>, response: impl Into<String>) -> Self {
        self.by_sample.insert(id.into(), response.into());
        self
    }

    pub fn with_fingerprint(mut self, fp: impl Into<String>, response: impl Into<String>) -> Self {
        self.by_fingerprint.insert(fp.into(), response.into());
        self
    }

    pub fn calls(&self) -> usize {
        self.calls.load(Ordering::SeqCst)
    }
}

impl Backend for FixedResponder {
    fn name(&self) -> &str {
        "fixed_responder"
    }

    fn supports_constrained_decoding(&self) -> bool {
        false
    }

    fn complete(&self, req: &CompletionRequest) -> Result<String, BackendError> {
        self.calls.fetch_add(1, Ordering::SeqCst);
        req.sample_id
            .as_ref()
            .and_then(|id| self.by_sample.get(id))
            .or_else(|| self.by_fingerprint.get(&req.fingerprint()))
            .or(self.default.as_ref())
            .cloned()
            .ok_or_else(|| BackendError::Protocol("no scripted response".into()))
    }
}

/// Times out on every attempt, retrying per its policy.
#[derive(Debug)]
pub struct FailingBackend {
    policy: RetryPolicy,
    attempts: AtomicUsize,
    calls: AtomicUsize,
}

impl FailingBackend {
    pub fn new(max_retries: u32) -> Self {
        FailingBackend {
            policy: RetryPolicy::immediate(max_retries),
            attempts: AtomicUsize::new(0),
            calls: AtomicUsize::new(0),
        }
    }

    pub fn attempts(&self) -> usize {
        self.attempts.load(Ordering::SeqCst)
    }

    pub fn calls(&self) -> usize {
        self.calls.load(Ordering::SeqCst)
    }
}

impl Backend for FailingBackend {
    fn name(&self) -> &str {
        "failing"
    }

    fn supports_constrained_decoding(&self) -> bool {
        false
    }

    fn complete(&self, _req: &CompletionRequest) -> Result<String, BackendError> {
        self.calls.fetch_add(1, Ordering::SeqCst);
        self.policy.run(|_| {
            self.attempts.fetch_add(1, Ordering::SeqCst);
            Err(BackendError::Timeout)
        })
    }
}

type Responder = dyn Fn(&CompletionRequest) -> Result<String, BackendError> + Send + Sync;

/// Backend driven by a closure.
pub struct FnBackend {
    name: String,
    f: Box<Responder>,
    constrained: bool,
    calls: AtomicUsize,
}

impl FnBackend {
    pub fn new<F>(name: impl Into<String>, f: F) -> Self
    where
        F: Fn(&CompletionRequest) -> Result<String, BackendError> + Send + Sync + 'static,
    {
        FnBackend {
            name: name.into(),
            f: Box::new(f),
            constrained: false,
            calls: AtomicUsize::new(0),
        }
    }

    /// Claim support for allowed-token decoding.
    pub fn constrained(mut self) -> Self {
        self.constrained = true;
        self
    }

    pub fn calls(&self) -> usize {
        self.calls.load(Ordering::SeqCst)
    }
}

impl Backend for FnBackend {
    fn name(&self) -> &str {
        &self.name
    }

    fn supports_constrained_decoding(&self) -> bool {
        self.constrained
    }

    fn complete(&self, req: &CompletionRequest) -> Result<String, BackendError> {
        self.calls.fetch_add(1, Ordering::SeqCst);
        (self.f)(req)
    }
}

/// Ground truth for one sample, as known to the oracle mocks.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OracleFixture {
    pub sample_id: String,
    pub gold_sql: Option<String>,
    pub labels: ErrorLabelSet,
    #[serde(default)]
    pub localizations: Vec<LocalizationBlock>,
}

type FixtureMap = Arc<BTreeMap<String, OracleFixture>>;

fn lookup<'a>(map: &'a FixtureMap, req: &CompletionRequest) -> Result<&'a OracleFixture, BackendError> {
    let id = req.sample_id.as_deref().unwrap_or("");
    map.get(id).ok_or_else(|| BackendError::MissingGold(id.to_string()))
}

macro_rules! oracle_backend {
    ($name:ident, $label:literal) => {
        pub struct $name {
            fixtures: FixtureMap,
            calls: AtomicUsize,
        }

        impl $name {
            pub fn calls(&self) -> usize {
                self.calls.load(Ordering::SeqCst)
            }
        }

        impl Backend for $name {
            fn name(&self) -> &str {
                $label
            }

            fn supports_constrained_decoding(&self) -> bool {
                true
            }

            fn complete(&self, req: &CompletionRequest) -> Result<String, BackendError> {
                self.calls.fetch_add(1, Ordering::SeqCst);
                let f = lookup(&self.fixtures, req)?;
                Self::answer(f, req)
            }
        }
    };
}

oracle_backend!(OracleDetector, "oracle_detector");
oracle_backend!(OracleLocalizer, "oracle_localizer");
oracle_backend!(OracleRefiner, "oracle_refiner");
oracle_backend!(OracleAssistant, "oracle_assistant");

impl OracleDetector {
    fn answer(f: &OracleFixture, _req: &CompletionRequest) -> Result<String, BackendError> {
        Ok(f.labels.tokens().join(" "))
    }
}

impl OracleLocalizer {
    /// Blocks for the types listed in the request's comma-separated
    /// `error_types` metadata (all fixture blocks when absent). A listed type
    /// without a block gets an empty one.
    fn answer(f: &OracleFixture, req: &CompletionRequest) -> Result<String, BackendError> {
        let wanted: Option<Vec<ErrorType>> = req
            .meta("error_types")
            .map(|v| v.split(',').filter_map(|n| ErrorType::from_name(n.trim())).collect());
        let mut blocks: Vec<LocalizationBlock> = f
            .localizations
            .iter()
            .filter(|b| wanted.as_ref().is_none_or(|w| w.contains(&b.error_type)))
            .cloned()
            .collect();
        for w in wanted.iter().flatten() {
            if !blocks.iter().any(|b| b.error_type == *w) {
                blocks.push(LocalizationBlock::new(*w));
            }
        }
        Ok(render_blocks(&blocks))
    }
}

impl OracleRefiner {
    fn answer(f: &OracleFixture, _req: &CompletionRequest) -> Result<String, BackendError> {
        f.gold_sql
            .clone()
            .ok_or_else(|| BackendError::MissingGold(f.sample_id.clone()))
    }
}

impl OracleAssistant {
    /// Injection annotation: the fixture labels plus the gold query.
    fn answer(f: &OracleFixture, _req: &CompletionRequest) -> Result<String, BackendError> {
        let sql = f
            .gold_sql
            .clone()
            .ok_or_else(|| BackendError::MissingGold(f.sample_id.clone()))?;
        Ok(serde_json::json!({ "labels": f.labels.names(), "sql": sql }).to_string())
    }
}

pub struct OracleBackends {
    pub detector: Arc<OracleDetector>,
    pub localizer: Arc<OracleLocalizer>,
    pub refiner: Arc<OracleRefiner>,
    pub assistant: Arc<OracleAssistant>,
}

/// Mocks for every role that answer from ground truth.
pub fn make_oracle(fixtures: &[OracleFixture]) -> Result<OracleBackends, BackendError> {
    let mut map = BTreeMap::new();
    for f in fixtures {
        if f.gold_sql.is_none() {
            return Err(BackendError::MissingGold(f.sample_id.clone()));
        }
        map.insert(f.sample_id.clone(), f.clone());
    }
    let map: FixtureMap = Arc::new(map);
    Ok(OracleBackends {
        detector: Arc::new(OracleDetector {
            fixtures: map.clone(),
            calls: AtomicUsize::new(0),
        }),
        localizer: Arc::new(OracleLocalizer {
            fixtures: map.clone(),
            calls: AtomicUsize::new(0),
        }),
        refiner: Arc::new(OracleRefiner {
            fixtures: map.clone(),
            calls: AtomicUsize::new(0),
        }),
        assistant: Arc::new(OracleAssistant {
            fixtures: map,
            calls: AtomicUsize::new(0),
        }),
    })
}
