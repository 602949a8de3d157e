use std::time::Duration;

use reqwest::blocking::Client;
use reqwest::StatusCode;
use serde_json::{json, Value};

use super::{Backend, BackendConfig, BackendError, CompletionRequest, RetryPolicy, Semaphore};

/// OpenAI-compatible chat-completions client.
pub struct HttpBackend {
    name: String,
    config: BackendConfig,
    api_key: Option<String>,
    client: Client,
    in_flight: Semaphore,
    policy: RetryPolicy,
}

impl HttpBackend {
    /// Reads the API key from the configured environment variable.
    pub fn new(name: impl Into<String>, config: BackendConfig) -> Result<Self, BackendError> {
        config.validate()?;
        let api_key = match &config.api_key_env {
            Some(var) => Some(
                std::env::var(var).map_err(|_| BackendError::Config(format!("environment variable {var} is not set")))?,
            ),
            None => None,
        };
        let client = Client::builder()
            .timeout(Duration::from_secs_f64(config.timeout_secs))
            .build()
            .map_err(|e| BackendError::Config(e.to_string()))?;
        Ok(HttpBackend {
            name: name.into(),
            in_flight: Semaphore::new(config.max_in_flight),
            policy: config.retry_policy(),
            config,
            api_key,
            client,
        })
    }

    pub fn with_retry_policy(mut self, policy: RetryPolicy) -> Self {
        self.policy = policy;
        self
    }

    fn body(&self, req: &CompletionRequest) -> Value {
        let mut body = json!({
            "model": self.config.model,
            "messages": [
                {"role": "system", "content": req.system},
                {"role": "user", "content": req.user},
            ],
            "temperature": self.config.temperature,
            "max_tokens": self.config.max_output_tokens,
        });
        if let (true, Some(tokens)) = (self.config.constrained_decoding, &req.allowed_tokens) {
            let alt: Vec<String> = tokens.iter().map(|t| regex::escape(t)).collect();
            let one = format!("(?:{})", alt.join("|"));
            body["guided_regex"] = Value::String(format!("{one}(?: {one})*"));
        }
        body
    }

    fn attempt(&self, body: &Value) -> Result<String, BackendError> {
        let url = format!("{}/chat/completions", self.config.base_url.trim_end_matches('/'));
        let mut rb = self.client.post(url).json(body);
        if let Some(k) = &self.api_key {
            rb = rb.bearer_auth(k);
        }
        let resp = rb.send().map_err(|e| {
            if e.is_timeout() {
                BackendError::Timeout
            } else {
                BackendError::Transport(e.to_string())
            }
        })?;
        let status = resp.status();
        if status == StatusCode::UNAUTHORIZED || status == StatusCode::FORBIDDEN {
            return Err(BackendError::Auth(status.to_string()));
        }
        if status == StatusCode::TOO_MANY_REQUESTS {
            let after_ms = resp
                .headers()
                .get("retry-after")
                .and_then(|v| v.to_str().ok())
                .and_then(|v| v.trim().parse::<f64>().ok())
                .map(|s| (s * 1000.0) as u64);
            return Err(BackendError::RateLimited { after_ms });
        }
        if status.is_server_error() {
            return Err(BackendError::Transport(status.to_string()));
        }
        if !status.is_success() {
            return Err(BackendError::Protocol(status.to_string()));
        }
        let json: Value = resp.json().map_err(|e| {
            if e.is_timeout() {
                BackendError::Timeout
            } else {
                BackendError::Protocol(e.to_string())
            }
        })?;
        parse_response(&json)
    }
}

fn parse_response(json: &Value) -> Result<String, BackendError> {
    json.pointer("/choices/0/message/content")
        .and_then(Value::as_str)
        .map(str::to_string)
        .ok_or_else(|| BackendError::Protocol("response has no choices[0].message.content".into()))
}

impl Backend for HttpBackend {
    fn name(&self) -> &str {
        &self.name
    }

    fn supports_constrained_decoding(&self) -> bool {
        self.config.constrained_decoding
    }

    fn complete(&self, req: &CompletionRequest) -> Result<String, BackendError> {
        let body = self.body(req);
        let _permit = self.in_flight.acquire();
        self.policy.run(|_| self.attempt(&body))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn response_parsing() {
        let ok = json!({"choices": [{"message": {"role": "assistant", "content": "[ERR]_7"}}]});
        assert_eq!(parse_response(&ok).unwrap(), "[ERR]_7");
        assert!(matches!(parse_response(&json!({"choices": []})), Err(BackendError::Protocol(_))));
    }

    #[test]
    fn constrained_body_carries_regex() {
        let cfg = BackendConfig {
            api_key_env: None,
            constrained_decoding: true,
            ..BackendConfig::default()
        };
        let b = HttpBackend::new("d", cfg).unwrap();
        let req = CompletionRequest::new(super::super::Role::Detector, "s", "u")
            .with_allowed_tokens(vec!["[ERR]_1".into(), "[ERR]_∅".into()]);
        let body = b.body(&req);
        let re = regex::Regex::new(&format!("^{}$", body["guided_regex"].as_str().unwrap())).unwrap();
        assert!(re.is_match("[ERR]_1 [ERR]_∅"));
        assert!(!re.is_match("[ERR]_2"));
        assert_eq!(body["temperature"], 0.0);
    }

    #[test]
    fn unreachable_server_is_a_transport_failure() {
        let cfg = BackendConfig {
            base_url: "http://127.0.0.1:9".into(),
            api_key_env: None,
            timeout_secs: 2.0,
            max_retries: 1,
            ..BackendConfig::default()
        };
        let b = HttpBackend::new("d", cfg).unwrap().with_retry_policy(RetryPolicy::immediate(1));
        let req = CompletionRequest::new(super::super::Role::Detector, "s", "u");
        let err = b.complete(&req).unwrap_err();
        assert!(matches!(err, BackendError::Transport(_) | BackendError::Timeout), "{err:?}");
    }
}
