//! The uniform "ask a model" boundary.
//!
//! Every pipeline stage funnels its prompts through a [`CompletionBackend`]:
//!
//! - [`remote::RemoteBackend`] — chat-completion style HTTP endpoint with
//!   retries, backoff, and optional response logging into a replay cache
//! - [`replay::ReplayBackend`] — deterministic lookup of recorded responses
//!   keyed by (model name, prompt hash)
//! - [`script::FixedScriptBackend`] — scripted replies, one per request
//! - [`synthetic::SyntheticBackend`] — a styled agent oracle that follows the
//!   presented context, its own memory table, or refuses, with configured
//!   probabilities
//!
//! [`batch_complete`] fans a request list out over a bounded worker pool.
//! Output order always matches input order and per-item failures never abort
//! the batch, so a full join of the results is safe to aggregate from.

pub mod remote;
pub mod replay;
pub mod script;
pub mod synthetic;

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::prompt::{ContextVariant, ExampleMix, Role};

// ---------------------------------------------------------------------------
// Conditions
// ---------------------------------------------------------------------------

/// Which pipeline phase issued a request.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Phase {
    /// No-context memory assessment.
    Memory,
    /// Zero-shot conflict evaluation.
    ZeroShot,
    /// Few-shot conflict evaluation.
    FewShot,
    /// Zero-shot conflict evaluation under a role prefix.
    RolePlay,
    /// Instruction-selection probe on a subset.
    Select,
}

/// A fully-qualified evaluation condition. Its canonical string form keys the
/// run ledger and seeds the synthetic agent, so it must stay stable.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Condition {
    pub phase: Phase,
    pub variant: ContextVariant,
    pub mix: Option<ExampleMix>,
    pub role: Role,
    pub instruction_id: String,
}

impl Condition {
    pub fn memory(instruction_id: &str) -> Self {
        Condition {
            phase: Phase::Memory,
            variant: ContextVariant::None,
            mix: None,
            role: Role::None,
            instruction_id: instruction_id.to_string(),
        }
    }

    pub fn zero_shot(variant: ContextVariant, instruction_id: &str) -> Self {
        Condition {
            phase: Phase::ZeroShot,
            variant,
            mix: None,
            role: Role::None,
            instruction_id: instruction_id.to_string(),
        }
    }

    pub fn few_shot(variant: ContextVariant, mix: ExampleMix, instruction_id: &str) -> Self {
        Condition {
            phase: Phase::FewShot,
            variant,
            mix: Some(mix),
            role: Role::None,
            instruction_id: instruction_id.to_string(),
        }
    }

    pub fn role_play(variant: ContextVariant, role: Role, instruction_id: &str) -> Self {
        Condition {
            phase: Phase::RolePlay,
            variant,
            mix: None,
            role,
            instruction_id: instruction_id.to_string(),
        }
    }

    pub fn select(variant: ContextVariant, instruction_id: &str) -> Self {
        Condition {
            phase: Phase::Select,
            variant,
            mix: None,
            role: Role::None,
            instruction_id: instruction_id.to_string(),
        }
    }

    /// Canonical tag, e.g. `zs:neg:i=zs-nohint-06`.
    pub fn tag(&self) -> String {
        let phase = match self.phase {
            Phase::Memory => "memory",
            Phase::ZeroShot => "zs",
            Phase::FewShot => "fs",
            Phase::RolePlay => "role",
            Phase::Select => "select",
        };
        let mut parts = vec![phase.to_string()];
        if let Some(mix) = self.mix {
            parts.push(
                match mix {
                    ExampleMix::AllPositive => "allpos",
                    ExampleMix::AllNegative => "allneg",
                    ExampleMix::Mixed => "mixed",
                }
                .to_string(),
            );
        }
        match self.role {
            Role::None => {}
            Role::Intuitive => parts.push("intuitive".to_string()),
            Role::Dependent => parts.push("dependent".to_string()),
        }
        match self.variant {
            ContextVariant::None => {}
            ContextVariant::Positive => parts.push("pos".to_string()),
            ContextVariant::Negative => parts.push("neg".to_string()),
        }
        parts.push(format!("i={}", self.instruction_id));
        parts.join(":")
    }
}

// ---------------------------------------------------------------------------
// Requests, responses, configuration
// ---------------------------------------------------------------------------

/// One prompt to complete, with the identity the backend and ledger need.
#[derive(Debug, Clone)]
pub struct CompletionRequest {
    pub sample_id: String,
    pub condition: Condition,
    pub prompt: String,
}

/// A completed request before parsing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawResponse {
    pub sample_id: String,
    pub condition: String,
    pub text: String,
    pub latency_ms: u64,
    pub attempts: u32,
    pub cache_hit: bool,
}

/// Which backend a model config selects.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BackendKind {
    Remote,
    Replay,
    Synthetic,
    FixedScript,
}

/// Retry behaviour for transient remote failures.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RetryPolicy {
    pub max_attempts: u32,
    /// Sleep before attempt k+1 is `backoff_ms[min(k, len-1)]`.
    pub backoff_ms: Vec<u64>,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        RetryPolicy {
            max_attempts: 3,
            backoff_ms: vec![250, 1_000, 4_000],
        }
    }
}

impl RetryPolicy {
    pub fn backoff_for(&self, attempt_index: u32) -> Duration {
        if self.backoff_ms.is_empty() {
            return Duration::ZERO;
        }
        let i = (attempt_index as usize).min(self.backoff_ms.len() - 1);
        Duration::from_millis(self.backoff_ms[i])
    }
}

/// Per-model gateway configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ModelConfig {
    pub name: String,
    pub backend: BackendKind,
    /// Full chat-completion URL (remote backend).
    pub endpoint: Option<String>,
    /// Environment variable holding the bearer token; the value itself never
    /// appears in configs or artifacts.
    pub api_key_env: String,
    pub max_output_tokens: u32,
    pub temperature: f64,
    pub parallelism: usize,
    pub retry: RetryPolicy,
    /// Global requests-per-minute cap; None disables rate limiting.
    pub rate_per_minute: Option<u32>,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            name: String::new(),
            backend: BackendKind::Synthetic,
            endpoint: None,
            api_key_env: "KRE_API_KEY".to_string(),
            max_output_tokens: 520,
            temperature: 0.0,
            parallelism: 1,
            retry: RetryPolicy::default(),
            rate_per_minute: None,
        }
    }
}

impl ModelConfig {
    pub fn validate(&self) -> Result<(), GatewayError> {
        if self.name.is_empty() {
            return Err(GatewayError::InvalidConfig("model name is empty".into()));
        }
        if self.parallelism == 0 {
            return Err(GatewayError::InvalidConfig(
                "parallelism must be >= 1".into(),
            ));
        }
        if self.backend == BackendKind::Remote && self.endpoint.is_none() {
            return Err(GatewayError::InvalidConfig(
                "remote backend requires an endpoint".into(),
            ));
        }
        Ok(())
    }
}

/// Gateway failures. Batch execution reports these per item.
#[derive(Debug, Error)]
pub enum GatewayError {
    #[error("transport failure after {attempts} attempt(s): {message}")]
    Transport { attempts: u32, message: String },
    #[error("replay cache miss for model '{model}' prompt hash {prompt_hash}")]
    CacheMiss { model: String, prompt_hash: String },
    #[error("fixed script exhausted after {served} response(s)")]
    ScriptExhausted { served: usize },
    #[error("synthetic agent has no memory entry for sample '{sample_id}'")]
    MissingMemory { sample_id: String },
    #[error("unknown sample '{sample_id}' for synthetic agent")]
    UnknownSample { sample_id: String },
    #[error("invalid gateway config: {0}")]
    InvalidConfig(String),
    #[error("batch aborted: {0}")]
    BatchAborted(String),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

/// The single capability all backends provide.
pub trait CompletionBackend: Send + Sync {
    fn complete(&self, request: &CompletionRequest) -> Result<RawResponse, GatewayError>;

    /// Model name responses are attributed to.
    fn model_name(&self) -> &str;
}

// ---------------------------------------------------------------------------
// Rate limiting
// ---------------------------------------------------------------------------

/// Spaces request starts so the global requests/minute cap is respected.
pub struct RateLimiter {
    interval: Duration,
    next_free: Mutex<Instant>,
}

impl RateLimiter {
    pub fn per_minute(requests: u32) -> Self {
        let requests = requests.max(1);
        RateLimiter {
            interval: Duration::from_secs_f64(60.0 / requests as f64),
            next_free: Mutex::new(Instant::now()),
        }
    }

    /// Block until a slot is available.
    pub fn acquire(&self) {
        let wait_until = {
            let mut next = self.next_free.lock().expect("limiter lock");
            let now = Instant::now();
            let slot = if *next > now { *next } else { now };
            *next = slot + self.interval;
            slot
        };
        let now = Instant::now();
        if wait_until > now {
            std::thread::sleep(wait_until - now);
        }
    }
}

// ---------------------------------------------------------------------------
// Batched completion
// ---------------------------------------------------------------------------

/// Run all requests with at most `parallelism` in flight. Results are in
/// input order; each item fails independently.
pub fn batch_complete(
    requests: &[CompletionRequest],
    backend: &dyn CompletionBackend,
    parallelism: usize,
    limiter: Option<&RateLimiter>,
) -> Vec<Result<RawResponse, GatewayError>> {
    let workers = parallelism.max(1).min(requests.len().max(1));
    let next = AtomicUsize::new(0);
    let slots: Vec<Mutex<Option<Result<RawResponse, GatewayError>>>> =
        requests.iter().map(|_| Mutex::new(None)).collect();

    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::SeqCst);
                if i >= requests.len() {
                    break;
                }
                if let Some(l) = limiter {
                    l.acquire();
                }
                let result = backend.complete(&requests[i]);
                *slots[i].lock().expect("slot lock") = Some(result);
            });
        }
    });

    slots
        .into_iter()
        .map(|slot| {
            slot.into_inner()
                .expect("slot lock")
                .unwrap_or_else(|| Err(GatewayError::BatchAborted("worker died".into())))
        })
        .collect()
}
