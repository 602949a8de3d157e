//! Chat-completion backends: an OpenAI-compatible HTTP client and
//! deterministic mocks.

mod http;
mod mock;

use std::collections::BTreeMap;
use std::sync::{Condvar, Mutex};
use std::time::Duration;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

pub use http::HttpBackend;
pub use mock::{
    make_oracle, FailingBackend, FixedResponder, FnBackend, OracleAssistant, OracleBackends, OracleDetector, OracleFixture,
    OracleLocalizer, OracleRefiner,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    Detector,
    Localizer,
    Refiner,
    Assistant,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompletionRequest {
    pub role: Role,
    pub system: String,
    pub user: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub allowed_tokens: Option<Vec<String>>,
    /// Sample the request is about; never sent over the wire.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sample_id: Option<String>,
    /// Out-of-band annotations for mocks and logging; never sent over the wire.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub metadata: BTreeMap<String, String>,
}

impl CompletionRequest {
    pub fn new(role: Role, system: impl Into<String>, user: impl Into<String>) -> Self {
        CompletionRequest {
            role,
            system: system.into(),
            user: user.into(),
            allowed_tokens: None,
            sample_id: None,
            metadata: BTreeMap::new(),
        }
    }

    pub fn with_sample(mut self, id: impl Into<String>) -> Self {
        self.sample_id = Some(id.into());
        self
    }

    pub fn with_allowed_tokens(mut self, tokens: Vec<String>) -> Self {
        self.allowed_tokens = Some(tokens);
        self
    }

    pub fn with_meta(mut self, key: &str, value: impl Into<String>) -> Self {
        self.metadata.insert(key.to_string(), value.into());
        self
    }

    pub fn meta(&self, key: &str) -> Option<&str> {
        self.metadata.get(key).map(String::as_str)
    }

    /// Hex SHA-256 over role, prompts and allowed tokens.
    pub fn fingerprint(&self) -> String {
        let mut h = Sha256::new();
        h.update(serde_json::to_string(&self.role).unwrap_or_default());
        for part in [&self.system, &self.user] {
            h.update([0u8]);
            h.update(part.as_bytes());
        }
        for t in self.allowed_tokens.iter().flatten() {
            h.update([1u8]);
            h.update(t.as_bytes());
        }
        format!("{:x}", h.finalize())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BackendError {
    #[error("authentication failed: {0}")]
    Auth(String),
    #[error("rate limited (retry after {after_ms:?} ms)")]
    RateLimited { after_ms: Option<u64> },
    #[error("request timed out")]
    Timeout,
    #[error("transport failure: {0}")]
    Transport(String),
    #[error("protocol error: {0}")]
    Protocol(String),
    #[error("no gold answer for sample {0}")]
    MissingGold(String),
    #[error("invalid backend configuration: {0}")]
    Config(String),
}

impl BackendError {
    pub fn is_retryable(&self) -> bool {
        matches!(
            self,
            BackendError::RateLimited { .. } | BackendError::Timeout | BackendError::Transport(_)
        )
    }
}

pub trait Backend: Send + Sync {
    fn name(&self) -> &str;
    fn supports_constrained_decoding(&self) -> bool;
    fn complete(&self, req: &CompletionRequest) -> Result<String, BackendError>;
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BackendConfig {
    pub base_url: String,
    pub model: String,
    /// Name of the environment variable holding the API key.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub api_key_env: Option<String>,
    pub timeout_secs: f64,
    pub max_retries: u32,
    #[serde(default)]
    pub constrained_decoding: bool,
    #[serde(default)]
    pub temperature: f64,
    pub max_output_tokens: u32,
    pub max_in_flight: usize,
}

impl Default for BackendConfig {
    fn default() -> Self {
        BackendConfig {
            base_url: "http://localhost:8000/v1".into(),
            model: "gpt-4o".into(),
            api_key_env: Some("OPENAI_API_KEY".into()),
            timeout_secs: 60.0,
            max_retries: 3,
            constrained_decoding: false,
            temperature: 0.0,
            max_output_tokens: 1024,
            max_in_flight: 4,
        }
    }
}

impl BackendConfig {
    pub fn validate(&self) -> Result<(), BackendError> {
        let bad = |m: &str| Err(BackendError::Config(m.to_string()));
        if self.timeout_secs.is_nan() || self.timeout_secs <= 0.0 {
            return bad("timeout_secs must be positive");
        }
        if self.temperature.is_nan() || self.temperature < 0.0 {
            return bad("temperature must be non-negative");
        }
        if self.max_in_flight == 0 {
            return bad("max_in_flight must be at least 1");
        }
        if self.base_url.is_empty() || self.model.is_empty() {
            return bad("base_url and model are required");
        }
        Ok(())
    }

    pub fn retry_policy(&self) -> RetryPolicy {
        RetryPolicy {
            max_retries: self.max_retries,
            base_delay: Duration::from_millis(500),
            max_delay: Duration::from_secs(16),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RetryPolicy {
    pub max_retries: u32,
    pub base_delay: Duration,
    pub max_delay: Duration,
}

impl RetryPolicy {
    pub fn immediate(max_retries: u32) -> Self {
        RetryPolicy {
            max_retries,
            base_delay: Duration::ZERO,
            max_delay: Duration::ZERO,
        }
    }

    pub fn delay(&self, attempt: u32, err: &BackendError) -> Duration {
        if let BackendError::RateLimited { after_ms: Some(ms) } = err {
            return Duration::from_millis(*ms);
        }
        self.base_delay
            .saturating_mul(2u32.saturating_pow(attempt))
            .min(self.max_delay)
    }

    /// Run `f` until it succeeds, fails permanently, or retries run out.
    pub fn run<F>(&self, mut f: F) -> Result<String, BackendError>
    where
        F: FnMut(u32) -> Result<String, BackendError>,
    {
        let mut attempt = 0;
        loop {
            match f(attempt) {
                Err(e) if e.is_retryable() && attempt < self.max_retries => {
                    let d = self.delay(attempt, &e);
                    log::debug!("attempt {attempt} failed ({e}); retrying in {d:?}");
                    std::thread::sleep(d);
                    attempt += 1;
                }
                other => return other,
            }
        }
    }
}

/// Counting semaphore bounding in-flight requests.
#[derive(Debug)]
pub struct Semaphore {
    permits: Mutex<usize>,
    cv: Condvar,
}

pub struct Permit<'a>(&'a Semaphore);

impl Semaphore {
    pub fn new(n: usize) -> Self {
        Semaphore {
            permits: Mutex::new(n),
            cv: Condvar::new(),
        }
    }

    pub fn acquire(&self) -> Permit<'_> {
        let mut p = self.permits.lock().unwrap_or_else(|e| e.into_inner());
        while *p == 0 {
            p = self.cv.wait(p).unwrap_or_else(|e| e.into_inner());
        }
        *p -= 1;
        Permit(self)
    }
}

impl Drop for Permit<'_> {
    fn drop(&mut self) {
        *self.0.permits.lock().unwrap_or_else(|e| e.into_inner()) += 1;
        self.0.cv.notify_one();
    }
}

#[cfg(test)]
mod tests;
