//! Append-only replay cache: deterministic storage of (model, prompt) ->
//! response records.
//!
//! The cache file is JSONL; each record carries the model name, the prompt
//! hash, the full prompt, the response, and a timestamp. The key is
//! `(model, prompt_hash)` where the hash is SHA-256 over the UTF-8 prompt
//! bytes, lowercase hex. The hash algorithm is part of the on-disk contract.

use std::collections::HashMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::{Mutex, RwLock};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{CompletionBackend, CompletionRequest, GatewayError, RawResponse};

/// SHA-256 of the prompt text, lowercase hex. Stable across runs and
/// platforms; the replay cache and the run ledger both key on it.
pub fn prompt_hash(prompt: &str) -> String {
    let digest = Sha256::digest(prompt.as_bytes());
    let mut out = String::with_capacity(64);
    for b in digest {
        out.push_str(&format!("{b:02x}"));
    }
    out
}

/// One cache record on disk.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReplayRecord {
    pub model: String,
    pub prompt_hash: String,
    pub prompt: String,
    pub response: String,
    pub timestamp: u64,
}

/// In-memory index over an append-only JSONL cache file. Reads are
/// concurrent; writes are serialized and flushed per record.
pub struct ReplayCache {
    entries: RwLock<HashMap<(String, String), String>>,
    writer: Mutex<Option<fs::File>>,
    path: Option<PathBuf>,
}

impl ReplayCache {
    /// Open (or create) a cache backed by `path`.
    pub fn open(path: &Path) -> Result<Self, GatewayError> {
        let mut entries = HashMap::new();
        if path.exists() {
            let text = fs::read_to_string(path)?;
            for line in text.lines().filter(|l| !l.trim().is_empty()) {
                let rec: ReplayRecord = serde_json::from_str(line).map_err(|e| {
                    GatewayError::InvalidConfig(format!(
                        "corrupt replay cache {}: {e}",
                        path.display()
                    ))
                })?;
                entries.insert((rec.model, rec.prompt_hash), rec.response);
            }
        }
        let file = fs::OpenOptions::new().create(true).append(true).open(path)?;
        Ok(ReplayCache {
            entries: RwLock::new(entries),
            writer: Mutex::new(Some(file)),
            path: Some(path.to_path_buf()),
        })
    }

    /// A cache that never touches disk; useful for tests and dry runs.
    pub fn in_memory() -> Self {
        ReplayCache {
            entries: RwLock::new(HashMap::new()),
            writer: Mutex::new(None),
            path: None,
        }
    }

    pub fn path(&self) -> Option<&Path> {
        self.path.as_deref()
    }

    pub fn len(&self) -> usize {
        self.entries.read().expect("cache lock").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn lookup(&self, model: &str, hash: &str) -> Option<String> {
        self.entries
            .read()
            .expect("cache lock")
            .get(&(model.to_string(), hash.to_string()))
            .cloned()
    }

    /// Record a response, appending to the backing file when there is one.
    pub fn record(&self, model: &str, prompt: &str, response: &str) -> Result<(), GatewayError> {
        let hash = prompt_hash(prompt);
        {
            let mut w = self.writer.lock().expect("cache writer lock");
            if let Some(file) = w.as_mut() {
                let rec = ReplayRecord {
                    model: model.to_string(),
                    prompt_hash: hash.clone(),
                    prompt: prompt.to_string(),
                    response: response.to_string(),
                    timestamp: SystemTime::now()
                        .duration_since(UNIX_EPOCH)
                        .map(|d| d.as_secs())
                        .unwrap_or(0),
                };
                let line = serde_json::to_string(&rec).expect("record serializes");
                writeln!(file, "{line}")?;
                file.flush()?;
            }
        }
        self.entries
            .write()
            .expect("cache lock")
            .insert((model.to_string(), hash), response.to_string());
        Ok(())
    }
}

/// Cache-first backend: serve hits from the cache; on a miss either delegate
/// to the fallback (recording its answer) or fail in strict mode.
pub struct ReplayBackend {
    cache: std::sync::Arc<ReplayCache>,
    model: String,
    fallback: Option<Box<dyn CompletionBackend>>,
}

impl ReplayBackend {
    pub fn strict(cache: std::sync::Arc<ReplayCache>, model: impl Into<String>) -> Self {
        ReplayBackend {
            cache,
            model: model.into(),
            fallback: None,
        }
    }

    pub fn with_fallback(
        cache: std::sync::Arc<ReplayCache>,
        model: impl Into<String>,
        fallback: Box<dyn CompletionBackend>,
    ) -> Self {
        ReplayBackend {
            cache,
            model: model.into(),
            fallback: Some(fallback),
        }
    }
}

impl CompletionBackend for ReplayBackend {
    fn complete(&self, request: &CompletionRequest) -> Result<RawResponse, GatewayError> {
        let hash = prompt_hash(&request.prompt);
        if let Some(text) = self.cache.lookup(&self.model, &hash) {
            return Ok(RawResponse {
                sample_id: request.sample_id.clone(),
                condition: request.condition.tag(),
                text,
                latency_ms: 0,
                attempts: 0,
                cache_hit: true,
            });
        }
        match &self.fallback {
            Some(inner) => {
                let response = inner.complete(request)?;
                self.cache.record(&self.model, &request.prompt, &response.text)?;
                Ok(response)
            }
            None => Err(GatewayError::CacheMiss {
                model: self.model.clone(),
                prompt_hash: hash,
            }),
        }
    }

    fn model_name(&self) -> &str {
        &self.model
    }
}
