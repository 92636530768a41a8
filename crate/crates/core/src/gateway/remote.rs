//! Chat-completion HTTP backend.
//!
//! Wire format: POST to the configured endpoint with a JSON body of
//! `{"model", "messages": [{"role": "user", "content": <prompt>}],
//! "temperature", "max_tokens"}`; the completion text is read from
//! `choices[0].message.content`. The whole assembled prompt is sent as a
//! single user message. The bearer token comes from the environment variable
//! named in the config and never appears in artifacts.
//!
//! Transient failures (connection errors, HTTP 429 and 5xx) are retried per
//! the config's retry policy; every attempt is counted in the response.
//! Request/response pairs can be mirrored into a [`ReplayCache`] so a remote
//! run is replayable offline.

use std::sync::Arc;
use std::time::Instant;

use serde_json::json;
use thiserror::Error;

use super::replay::ReplayCache;
use super::{CompletionBackend, CompletionRequest, GatewayError, ModelConfig, RawResponse};

/// A raw HTTP reply.
#[derive(Debug, Clone)]
pub struct HttpReply {
    pub status: u16,
    pub body: String,
}

#[derive(Debug, Error)]
pub enum TransportFailure {
    #[error("connection: {0}")]
    Connection(String),
}

/// Minimal POST-JSON capability; swapped out in tests.
pub trait HttpTransport: Send + Sync {
    fn post_json(
        &self,
        url: &str,
        bearer: Option<&str>,
        body: &serde_json::Value,
    ) -> Result<HttpReply, TransportFailure>;
}

/// Blocking reqwest transport.
pub struct ReqwestTransport {
    client: reqwest::blocking::Client,
}

impl ReqwestTransport {
    pub fn new() -> Self {
        ReqwestTransport {
            client: reqwest::blocking::Client::new(),
        }
    }
}

impl Default for ReqwestTransport {
    fn default() -> Self {
        Self::new()
    }
}

impl HttpTransport for ReqwestTransport {
    fn post_json(
        &self,
        url: &str,
        bearer: Option<&str>,
        body: &serde_json::Value,
    ) -> Result<HttpReply, TransportFailure> {
        let mut req = self.client.post(url).json(body);
        if let Some(token) = bearer {
            req = req.bearer_auth(token);
        }
        let resp = req
            .send()
            .map_err(|e| TransportFailure::Connection(e.to_string()))?;
        let status = resp.status().as_u16();
        let body = resp
            .text()
            .map_err(|e| TransportFailure::Connection(e.to_string()))?;
        Ok(HttpReply { status, body })
    }
}

/// Remote chat-completion backend.
pub struct RemoteBackend {
    config: ModelConfig,
    transport: Box<dyn HttpTransport>,
    /// When set, every successful completion is recorded for replay.
    log: Option<Arc<ReplayCache>>,
}

impl RemoteBackend {
    pub fn new(config: ModelConfig) -> Result<Self, GatewayError> {
        Self::with_transport(config, Box::new(ReqwestTransport::new()))
    }

    pub fn with_transport(
        config: ModelConfig,
        transport: Box<dyn HttpTransport>,
    ) -> Result<Self, GatewayError> {
        config.validate()?;
        Ok(RemoteBackend {
            config,
            transport,
            log: None,
        })
    }

    pub fn with_log(mut self, cache: Arc<ReplayCache>) -> Self {
        self.log = Some(cache);
        self
    }

    fn bearer(&self) -> Option<String> {
        std::env::var(&self.config.api_key_env).ok()
    }

    /// Complete a bare prompt, returning (text, attempts used).
    pub fn complete_text(&self, prompt: &str) -> Result<(String, u32), GatewayError> {
        let endpoint = self
            .config
            .endpoint
            .as_deref()
            .ok_or_else(|| GatewayError::InvalidConfig("remote endpoint missing".into()))?;
        let body = json!({
            "model": self.config.name,
            "messages": [{"role": "user", "content": prompt}],
            "temperature": self.config.temperature,
            "max_tokens": self.config.max_output_tokens,
        });
        let bearer = self.bearer();
        let max = self.config.retry.max_attempts.max(1);
        let mut last_error = String::new();
        for attempt in 0..max {
            if attempt > 0 {
                std::thread::sleep(self.config.retry.backoff_for(attempt - 1));
            }
            match self.transport.post_json(endpoint, bearer.as_deref(), &body) {
                Ok(reply) if reply.status == 200 => {
                    let text = extract_completion(&reply.body).map_err(|message| {
                        GatewayError::Transport {
                            attempts: attempt + 1,
                            message,
                        }
                    })?;
                    if let Some(log) = &self.log {
                        log.record(&self.config.name, prompt, &text)?;
                    }
                    return Ok((text, attempt + 1));
                }
                Ok(reply) if reply.status == 429 || reply.status >= 500 => {
                    // Rate limited or server-side failure: retryable.
                    last_error = format!("http {}", reply.status);
                }
                Ok(reply) => {
                    return Err(GatewayError::Transport {
                        attempts: attempt + 1,
                        message: format!("http {}: {}", reply.status, truncate(&reply.body, 200)),
                    });
                }
                Err(e) => last_error = e.to_string(),
            }
        }
        Err(GatewayError::Transport {
            attempts: max,
            message: last_error,
        })
    }
}

fn truncate(s: &str, max: usize) -> String {
    if s.chars().count() <= max {
        s.to_string()
    } else {
        s.chars().take(max).collect::<String>() + "..."
    }
}

fn extract_completion(body: &str) -> Result<String, String> {
    let value: serde_json::Value =
        serde_json::from_str(body).map_err(|e| format!("bad response json: {e}"))?;
    value
        .pointer("/choices/0/message/content")
        .and_then(|v| v.as_str())
        .map(str::to_string)
        .ok_or_else(|| "response missing choices[0].message.content".to_string())
}

impl CompletionBackend for RemoteBackend {
    fn complete(&self, request: &CompletionRequest) -> Result<RawResponse, GatewayError> {
        let start = Instant::now();
        let (text, attempts) = self.complete_text(&request.prompt)?;
        Ok(RawResponse {
            sample_id: request.sample_id.clone(),
            condition: request.condition.tag(),
            text,
            latency_ms: start.elapsed().as_millis() as u64,
            attempts,
            cache_hit: false,
        })
    }

    fn model_name(&self) -> &str {
        &self.config.name
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gateway::{BackendKind, Condition, RetryPolicy};
    use std::sync::Mutex;

    struct FlakyTransport {
        replies: Mutex<Vec<Result<HttpReply, TransportFailure>>>,
    }

    impl HttpTransport for FlakyTransport {
        fn post_json(
            &self,
            _url: &str,
            _bearer: Option<&str>,
            _body: &serde_json::Value,
        ) -> Result<HttpReply, TransportFailure> {
            self.replies.lock().unwrap().remove(0)
        }
    }

    fn config() -> ModelConfig {
        ModelConfig {
            name: "test-model".into(),
            backend: BackendKind::Remote,
            endpoint: Some("http://localhost/v1/chat/completions".into()),
            retry: RetryPolicy {
                max_attempts: 3,
                backoff_ms: vec![0],
            },
            ..ModelConfig::default()
        }
    }

    fn ok_reply(text: &str) -> Result<HttpReply, TransportFailure> {
        Ok(HttpReply {
            status: 200,
            body: serde_json::json!({
                "choices": [{"message": {"role": "assistant", "content": text}}]
            })
            .to_string(),
        })
    }

    fn request() -> CompletionRequest {
        CompletionRequest {
            sample_id: "s1".into(),
            condition: Condition::memory("m"),
            prompt: "hello".into(),
        }
    }

    #[test]
    fn two_failures_then_success_uses_three_attempts() {
        let transport = FlakyTransport {
            replies: Mutex::new(vec![
                Err(TransportFailure::Connection("refused".into())),
                Ok(HttpReply {
                    status: 503,
                    body: String::new(),
                }),
                ok_reply("The answer is A."),
            ]),
        };
        let backend = RemoteBackend::with_transport(config(), Box::new(transport)).unwrap();
        let r = backend.complete(&request()).unwrap();
        assert_eq!(r.text, "The answer is A.");
        assert_eq!(r.attempts, 3);
    }

    #[test]
    fn exhausted_retries_surface_transport_error() {
        let transport = FlakyTransport {
            replies: Mutex::new(vec![
                Ok(HttpReply {
                    status: 429,
                    body: String::new(),
                }),
                Ok(HttpReply {
                    status: 429,
                    body: String::new(),
                }),
                Ok(HttpReply {
                    status: 429,
                    body: String::new(),
                }),
            ]),
        };
        let backend = RemoteBackend::with_transport(config(), Box::new(transport)).unwrap();
        let err = backend.complete(&request()).unwrap_err();
        match err {
            GatewayError::Transport { attempts, .. } => assert_eq!(attempts, 3),
            other => panic!("unexpected error {other}"),
        }
    }

    #[test]
    fn non_retryable_status_fails_fast() {
        let transport = FlakyTransport {
            replies: Mutex::new(vec![Ok(HttpReply {
                status: 401,
                body: "unauthorized".into(),
            })]),
        };
        let backend = RemoteBackend::with_transport(config(), Box::new(transport)).unwrap();
        let err = backend.complete(&request()).unwrap_err();
        match err {
            GatewayError::Transport { attempts, message } => {
                assert_eq!(attempts, 1);
                assert!(message.contains("401"), "{message}");
            }
            other => panic!("unexpected error {other}"),
        }
    }

    #[test]
    fn successful_completions_are_logged_for_replay() {
        let transport = FlakyTransport {
            replies: Mutex::new(vec![ok_reply("logged")]),
        };
        let cache = Arc::new(ReplayCache::in_memory());
        let backend = RemoteBackend::with_transport(config(), Box::new(transport))
            .unwrap()
            .with_log(cache.clone());
        backend.complete(&request()).unwrap();
        let hash = super::super::replay::prompt_hash("hello");
        assert_eq!(cache.lookup("test-model", &hash).unwrap(), "logged");
    }
}
