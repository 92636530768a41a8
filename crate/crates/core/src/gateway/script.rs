//! Scripted backend: replies come from a fixed list, one per request, in
//! submission order. The file format is plain text, one response per line.

use std::path::Path;
use std::sync::Mutex;

use super::{CompletionBackend, CompletionRequest, GatewayError, RawResponse};

pub struct FixedScriptBackend {
    model: String,
    lines: Vec<String>,
    cursor: Mutex<usize>,
}

impl FixedScriptBackend {
    pub fn new(model: impl Into<String>, lines: Vec<String>) -> Self {
        FixedScriptBackend {
            model: model.into(),
            lines,
            cursor: Mutex::new(0),
        }
    }

    pub fn from_file(model: impl Into<String>, path: &Path) -> Result<Self, GatewayError> {
        let text = std::fs::read_to_string(path)?;
        Ok(Self::new(model, text.lines().map(str::to_string).collect()))
    }

    pub fn served(&self) -> usize {
        *self.cursor.lock().expect("cursor lock")
    }
}

impl CompletionBackend for FixedScriptBackend {
    fn complete(&self, request: &CompletionRequest) -> Result<RawResponse, GatewayError> {
        let mut cursor = self.cursor.lock().expect("cursor lock");
        if *cursor >= self.lines.len() {
            return Err(GatewayError::ScriptExhausted { served: *cursor });
        }
        let text = self.lines[*cursor].clone();
        *cursor += 1;
        Ok(RawResponse {
            sample_id: request.sample_id.clone(),
            condition: request.condition.tag(),
            text,
            latency_ms: 0,
            attempts: 1,
            cache_hit: false,
        })
    }

    fn model_name(&self) -> &str {
        &self.model
    }
}
