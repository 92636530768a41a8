//! Canonical data model for conflict samples and `kre-jsonl` dataset I/O.
//!
//! A conflict sample is a multiple-choice question carrying two answers and
//! two contexts: the golden answer with a supporting positive context, and a
//! misleading (negative) answer with a fabricated context supporting it.
//! Datasets are stored as `kre-jsonl`: UTF-8, one JSON record per line, field
//! names exactly as on [`ConflictSample`], option letters uppercase ASCII.
//! Unknown fields are rejected so schema drift cannot silently corrupt
//! downstream metrics.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::fs;
use std::io::{BufRead, BufReader};
use std::path::Path;

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

/// Source corpus a sample was derived from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Corpus {
    MuSiQue,
    #[serde(rename = "SQuADv2")]
    SquadV2,
    #[serde(rename = "ECQA")]
    Ecqa,
    #[serde(rename = "eCARE")]
    ECare,
    Custom,
}

impl Corpus {
    pub const ALL: [Corpus; 5] = [
        Corpus::MuSiQue,
        Corpus::SquadV2,
        Corpus::Ecqa,
        Corpus::ECare,
        Corpus::Custom,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Corpus::MuSiQue => "MuSiQue",
            Corpus::SquadV2 => "SQuADv2",
            Corpus::Ecqa => "ECQA",
            Corpus::ECare => "eCARE",
            Corpus::Custom => "Custom",
        }
    }
}

impl fmt::Display for Corpus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Task family: machine reading comprehension or commonsense reasoning.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum TaskKind {
    #[serde(rename = "MRC")]
    Mrc,
    #[serde(rename = "CR")]
    Cr,
}

/// An option letter, `A` through `E`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct OptionLetter(char);

impl OptionLetter {
    pub const MAX_OPTIONS: usize = 5;

    pub fn new(c: char) -> Option<Self> {
        if ('A'..='E').contains(&c) {
            Some(OptionLetter(c))
        } else {
            None
        }
    }

    /// Letter for a zero-based option index (0 -> A).
    pub fn from_index(index: usize) -> Option<Self> {
        if index < Self::MAX_OPTIONS {
            Self::new((b'A' + index as u8) as char)
        } else {
            None
        }
    }

    pub fn as_char(&self) -> char {
        self.0
    }
}

impl fmt::Display for OptionLetter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl Serialize for OptionLetter {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_char(self.0)
    }
}

impl<'de> Deserialize<'de> for OptionLetter {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        let mut chars = s.chars();
        match (chars.next(), chars.next()) {
            (Some(c), None) => OptionLetter::new(c)
                .ok_or_else(|| D::Error::custom(format!("invalid option letter '{s}'"))),
            _ => Err(D::Error::custom(format!("invalid option letter '{s}'"))),
        }
    }
}

/// One multiple-choice conflict item.
///
/// Field names are the on-disk `kre-jsonl` schema; do not rename.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConflictSample {
    /// Opaque unique identifier within a dataset.
    pub id: String,
    pub corpus: Corpus,
    pub task_kind: TaskKind,
    /// The question text.
    pub question: String,
    /// Ordered letter -> option text map (2 to 5 entries).
    pub options: BTreeMap<OptionLetter, String>,
    /// Letter of the correct answer.
    pub golden: OptionLetter,
    /// Letter of the chosen misleading answer.
    pub negative: OptionLetter,
    /// Passage supporting the golden answer.
    pub positive_context: String,
    /// Fabricated passage supporting the negative answer.
    pub negative_context: String,
    /// Whether the source item passed answerability filtering upstream.
    pub answerable: bool,
}

impl ConflictSample {
    /// Option text for the golden letter.
    pub fn golden_text(&self) -> &str {
        &self.options[&self.golden]
    }

    /// Option text for the negative letter.
    pub fn negative_text(&self) -> &str {
        &self.options[&self.negative]
    }

    /// Letters in display order.
    pub fn letters(&self) -> Vec<OptionLetter> {
        self.options.keys().copied().collect()
    }

    /// Check every per-sample invariant; returns the first violation.
    pub fn validate(&self) -> Result<(), String> {
        if self.id.trim().is_empty() {
            return Err("id must be non-empty".into());
        }
        let n = self.options.len();
        if !(2..=OptionLetter::MAX_OPTIONS).contains(&n) {
            return Err(format!("options must have 2..=5 entries, got {n}"));
        }
        for (letter, text) in &self.options {
            if text.trim().is_empty() {
                return Err(format!("option {letter} has empty text"));
            }
        }
        if !self.options.contains_key(&self.golden) {
            return Err(format!("golden letter {} not among options", self.golden));
        }
        if !self.options.contains_key(&self.negative) {
            return Err(format!(
                "negative letter {} not among options",
                self.negative
            ));
        }
        if self.golden == self.negative {
            return Err(format!("golden == negative ({})", self.golden));
        }
        if self.positive_context.trim().is_empty() {
            return Err("positive_context must be non-empty".into());
        }
        if self.negative_context.trim().is_empty() {
            return Err("negative_context must be non-empty".into());
        }
        if self.positive_context == self.negative_context {
            return Err("positive_context and negative_context must differ".into());
        }
        Ok(())
    }
}

/// An ordered collection of validated conflict samples.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SampleSet {
    pub name: String,
    pub provenance: String,
    samples: Vec<ConflictSample>,
}

impl SampleSet {
    /// Build a set from samples, enforcing per-sample invariants and id
    /// uniqueness. Iteration order is the given order.
    pub fn new(
        name: impl Into<String>,
        provenance: impl Into<String>,
        samples: Vec<ConflictSample>,
    ) -> Result<Self, DatasetError> {
        let mut seen = HashSet::new();
        for (i, s) in samples.iter().enumerate() {
            let line = i + 1;
            s.validate()
                .map_err(|reason| DatasetError::Schema { line, reason })?;
            if !seen.insert(s.id.clone()) {
                return Err(DatasetError::Schema {
                    line,
                    reason: format!("duplicate id '{}'", s.id),
                });
            }
        }
        Ok(SampleSet {
            name: name.into(),
            provenance: provenance.into(),
            samples,
        })
    }

    pub fn samples(&self) -> &[ConflictSample] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &ConflictSample> {
        self.samples.iter()
    }

    pub fn get(&self, id: &str) -> Option<&ConflictSample> {
        self.samples.iter().find(|s| s.id == id)
    }

    /// Canonical `kre-jsonl` serialization: one compact JSON record per line,
    /// declared field order, trailing newline.
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for s in &self.samples {
            out.push_str(&serde_json::to_string(s).expect("sample serializes"));
            out.push('\n');
        }
        out
    }

    pub fn write_jsonl(&self, path: &Path) -> Result<(), DatasetError> {
        fs::write(path, self.to_jsonl()).map_err(|e| DatasetError::Io {
            path: path.display().to_string(),
            source: e,
        })
    }
}

/// Dataset on-disk format selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DatasetFormat {
    #[serde(rename = "kre-jsonl")]
    KreJsonl,
}

/// Errors from dataset loading and validation.
///
/// Validation is total: every record is either accepted or produces an error
/// locating the offending line; the whole file is rejected on the first
/// violation.
#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("line {line}: {reason}")]
    Schema { line: usize, reason: String },
}

/// Load a `kre-jsonl` dataset, rejecting the whole file on any invalid record.
pub fn load_dataset(path: &Path, format: DatasetFormat) -> Result<SampleSet, DatasetError> {
    let DatasetFormat::KreJsonl = format;
    let file = fs::File::open(path).map_err(|e| DatasetError::Io {
        path: path.display().to_string(),
        source: e,
    })?;
    let reader = BufReader::new(file);
    let mut samples = Vec::new();
    let mut seen = HashSet::new();
    for (i, line) in reader.lines().enumerate() {
        let line_no = i + 1;
        let line = line.map_err(|e| DatasetError::Io {
            path: path.display().to_string(),
            source: e,
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let sample: ConflictSample =
            serde_json::from_str(&line).map_err(|e| DatasetError::Schema {
                line: line_no,
                reason: e.to_string(),
            })?;
        sample.validate().map_err(|reason| DatasetError::Schema {
            line: line_no,
            reason,
        })?;
        if !seen.insert(sample.id.clone()) {
            return Err(DatasetError::Schema {
                line: line_no,
                reason: format!("duplicate id '{}'", sample.id),
            });
        }
        samples.push(sample);
    }
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    Ok(SampleSet {
        name,
        provenance: format!("loaded from {}", path.display()),
        samples,
    })
}

/// Per-corpus sample counts plus the total.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusStats {
    pub counts: BTreeMap<Corpus, usize>,
    pub total: usize,
}

impl CorpusStats {
    pub fn count(&self, corpus: Corpus) -> usize {
        self.counts.get(&corpus).copied().unwrap_or(0)
    }
}

/// Count samples per corpus; the counts always partition the set.
pub fn corpus_stats(set: &SampleSet) -> CorpusStats {
    let mut counts = BTreeMap::new();
    for s in set.iter() {
        *counts.entry(s.corpus).or_insert(0) += 1;
    }
    CorpusStats {
        counts,
        total: set.len(),
    }
}

/// Dataset manifest emitted alongside a written dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub name: String,
    pub provenance: String,
    pub counts: BTreeMap<Corpus, usize>,
    pub total: usize,
}

impl DatasetManifest {
    pub fn for_set(set: &SampleSet) -> Self {
        let stats = corpus_stats(set);
        DatasetManifest {
            name: set.name.clone(),
            provenance: set.provenance.clone(),
            counts: stats.counts,
            total: stats.total,
        }
    }

    pub fn write(&self, path: &Path) -> Result<(), DatasetError> {
        let mut text = serde_json::to_string_pretty(self).expect("manifest serializes");
        text.push('\n');
        fs::write(path, text).map_err(|e| DatasetError::Io {
            path: path.display().to_string(),
            source: e,
        })
    }
}
