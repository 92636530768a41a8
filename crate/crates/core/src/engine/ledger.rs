//! Run ledger: the append-only record of every model interaction.
//!
//! First line is a header (config hash, seed, parser version, model); each
//! following line is one `(sample id, condition, prompt hash, raw response,
//! parsed verdict)` entry. The ledger is the source of truth for resumption:
//! a (sample, condition) pair already present is never re-sent to a backend.
//! Entries are appended after the batch join in request order, so ledgers are
//! byte-identical across parallelism levels.

use std::collections::HashMap;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::EngineError;
use crate::parser::{MatchRule, Verdict};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LedgerHeader {
    pub model: String,
    pub config_hash: String,
    pub seed: u64,
    pub parser_version: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LedgerEntry {
    pub sample_id: String,
    pub condition: String,
    pub prompt_hash: String,
    pub response: String,
    pub verdict: Verdict,
    pub match_rule: MatchRule,
}

/// In-memory ledger with optional file backing.
#[derive(Debug)]
pub struct Ledger {
    header: LedgerHeader,
    entries: Vec<LedgerEntry>,
    index: HashMap<(String, String), usize>,
    path: Option<PathBuf>,
}

impl Ledger {
    pub fn new(header: LedgerHeader) -> Self {
        Ledger {
            header,
            entries: Vec::new(),
            index: HashMap::new(),
            path: None,
        }
    }

    /// Open a file-backed ledger, loading existing entries. An existing
    /// header must match exactly; mixing configs in one ledger corrupts
    /// every metric downstream.
    pub fn open(path: &Path, header: LedgerHeader) -> Result<Self, EngineError> {
        let mut ledger = Ledger::new(header);
        ledger.path = Some(path.to_path_buf());
        if path.exists() {
            let text = fs::read_to_string(path)?;
            let mut lines = text.lines().filter(|l| !l.trim().is_empty());
            if let Some(first) = lines.next() {
                let on_disk: LedgerHeader = serde_json::from_str(first).map_err(|e| {
                    EngineError::Ledger(format!("corrupt header in {}: {e}", path.display()))
                })?;
                if on_disk != ledger.header {
                    return Err(EngineError::Ledger(format!(
                        "ledger {} was written under a different run configuration",
                        path.display()
                    )));
                }
                for (i, line) in lines.enumerate() {
                    let entry: LedgerEntry = serde_json::from_str(line).map_err(|e| {
                        EngineError::Ledger(format!(
                            "corrupt entry at {} line {}: {e}",
                            path.display(),
                            i + 2
                        ))
                    })?;
                    ledger.insert(entry);
                }
            }
        }
        Ok(ledger)
    }

    fn insert(&mut self, entry: LedgerEntry) {
        let key = (entry.sample_id.clone(), entry.condition.clone());
        self.index.insert(key, self.entries.len());
        self.entries.push(entry);
    }

    pub fn header(&self) -> &LedgerHeader {
        &self.header
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[LedgerEntry] {
        &self.entries
    }

    pub fn lookup(&self, sample_id: &str, condition: &str) -> Option<&LedgerEntry> {
        self.index
            .get(&(sample_id.to_string(), condition.to_string()))
            .map(|i| &self.entries[*i])
    }

    /// Append entries in order, flushing to the backing file when present.
    /// The header line is written lazily with the first batch.
    pub fn append(&mut self, new_entries: Vec<LedgerEntry>) -> Result<(), EngineError> {
        if new_entries.is_empty() {
            return Ok(());
        }
        if let Some(path) = &self.path {
            let fresh = !path.exists() || fs::metadata(path)?.len() == 0;
            let mut file = fs::OpenOptions::new().create(true).append(true).open(path)?;
            if fresh {
                writeln!(
                    file,
                    "{}",
                    serde_json::to_string(&self.header).expect("header serializes")
                )?;
            }
            for e in &new_entries {
                writeln!(file, "{}", serde_json::to_string(e).expect("entry serializes"))?;
            }
            file.flush()?;
        }
        for e in new_entries {
            self.insert(e);
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sample::OptionLetter;

    fn header() -> LedgerHeader {
        LedgerHeader {
            model: "m".into(),
            config_hash: "abc".into(),
            seed: 7,
            parser_version: "1.0.0".into(),
        }
    }

    fn entry(id: &str, condition: &str) -> LedgerEntry {
        LedgerEntry {
            sample_id: id.into(),
            condition: condition.into(),
            prompt_hash: "h".into(),
            response: "The answer is A.".into(),
            verdict: Verdict::Choice(OptionLetter::new('A').unwrap()),
            match_rule: MatchRule::AnswerIsPattern,
        }
    }

    #[test]
    fn round_trips_through_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("ledger.jsonl");
        {
            let mut ledger = Ledger::open(&path, header()).unwrap();
            ledger.append(vec![entry("s1", "memory:i=m"), entry("s2", "memory:i=m")]).unwrap();
        }
        let ledger = Ledger::open(&path, header()).unwrap();
        assert_eq!(ledger.len(), 2);
        assert!(ledger.lookup("s1", "memory:i=m").is_some());
        assert!(ledger.lookup("s1", "zs:neg:i=x").is_none());
    }

    #[test]
    fn header_mismatch_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("ledger.jsonl");
        {
            let mut ledger = Ledger::open(&path, header()).unwrap();
            ledger.append(vec![entry("s1", "memory:i=m")]).unwrap();
        }
        let mut other = header();
        other.seed = 8;
        let err = Ledger::open(&path, other).unwrap_err();
        assert!(matches!(err, EngineError::Ledger(_)));
    }
}
