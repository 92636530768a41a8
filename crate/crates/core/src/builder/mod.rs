//! Conflict-sample construction.
//!
//! Source items (question, golden answer, golden context) become full
//! conflict samples in three steps: generate misleading options (or reuse a
//! commonsense corpus's existing distractors), pick one misleading option as
//! the negative answer and shuffle the letter layout, then synthesize the
//! negative context. Reading-comprehension items get their negative context
//! by entity substitution inside the golden context; commonsense items get a
//! generated explanation for the negative answer.
//!
//! Also here: the instruction pool ([`instructions`]) and the annotation
//! sheet export used for external human review of generated contexts.

pub mod generation;
pub mod instructions;
mod substitute;

use std::collections::BTreeMap;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

pub use generation::GenerationBackend;
pub use instructions::{assemble_instruction_pool, Instruction, InstructionPool, Origin, Setting};
pub use substitute::substitute_entity;

use crate::sample::{ConflictSample, Corpus, OptionLetter, SampleSet, TaskKind};

/// Construction failures.
#[derive(Debug, Error)]
pub enum BuilderError {
    #[error("generation failed: {0}")]
    Generation(String),
    #[error("degenerate item: {0}")]
    DegenerateItem(String),
    #[error("no misleading options to choose from")]
    EmptyOptions,
    #[error("golden answer '{needle}' not found in context")]
    SubstitutionMiss { needle: String },
    #[error("rewrite output failed validation: {0}")]
    RewriteInvalid(String),
    #[error("duplicate id '{0}'")]
    DuplicateId(String),
    #[error("requested {requested} rows but only {available} available")]
    SampleTooLarge { requested: usize, available: usize },
    #[error("invalid instruction {id}: {reason}")]
    InvalidInstruction { id: String, reason: String },
    #[error("invalid source item: {0}")]
    InvalidItem(String),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

// ---------------------------------------------------------------------------
// Source items
// ---------------------------------------------------------------------------

fn default_true() -> bool {
    true
}

/// One upstream item before conflict construction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SourceItem {
    #[serde(default)]
    pub id: Option<String>,
    pub corpus: Corpus,
    pub task_kind: TaskKind,
    pub question: String,
    pub golden_answer: String,
    pub golden_context: String,
    /// Distractors shipped by the source corpus (commonsense items).
    #[serde(default)]
    pub existing_distractors: Option<Vec<String>>,
    /// Whether upstream filtering judged the item answerable from context.
    #[serde(default = "default_true")]
    pub answerable: bool,
}

impl SourceItem {
    pub fn validate(&self) -> Result<(), BuilderError> {
        if self.golden_answer.trim().is_empty() {
            return Err(BuilderError::InvalidItem("empty golden answer".into()));
        }
        if self.task_kind == TaskKind::Mrc
            && !self.golden_context.contains(self.golden_answer.trim())
        {
            return Err(BuilderError::InvalidItem(format!(
                "MRC context does not contain the golden answer '{}'",
                self.golden_answer
            )));
        }
        Ok(())
    }
}

/// Load source items from JSONL.
pub fn load_source_items(path: &Path) -> Result<Vec<SourceItem>, BuilderError> {
    let text = std::fs::read_to_string(path)?;
    let mut items = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let item: SourceItem = serde_json::from_str(line)
            .map_err(|e| BuilderError::InvalidItem(format!("line {}: {e}", i + 1)))?;
        item.validate()
            .map_err(|e| BuilderError::InvalidItem(format!("line {}: {e}", i + 1)))?;
        items.push(item);
    }
    Ok(items)
}

// ---------------------------------------------------------------------------
// Misleading options
// ---------------------------------------------------------------------------

/// Pull candidate texts out of a numbered-list completion
/// (`1. foo 2. bar ...`); falls back to one candidate per line.
pub fn parse_candidate_list(response: &str) -> Vec<String> {
    let marker = regex::Regex::new(r"(?:^|\s)\d+\s*[.)]\s*").expect("static regex");
    let spans: Vec<(usize, usize)> = marker
        .find_iter(response)
        .map(|m| (m.start(), m.end()))
        .collect();
    let clean = |s: &str| {
        s.trim()
            .trim_end_matches([',', ';'])
            .trim()
            .to_string()
    };
    if spans.len() >= 2 {
        let mut out = Vec::new();
        for (i, (_, body_start)) in spans.iter().enumerate() {
            let end = spans.get(i + 1).map(|s| s.0).unwrap_or(response.len());
            let item = clean(&response[*body_start..end]);
            if !item.is_empty() {
                out.push(item);
            }
        }
        return out;
    }
    response
        .lines()
        .map(|l| clean(l.trim_start_matches(['-', '*']).trim()))
        .filter(|l| !l.is_empty())
        .collect()
}

/// Generate `k` misleading options for a reading-comprehension item.
///
/// Candidates must be mutually distinct and distinct from the golden answer
/// (case-insensitive, trimmed). Validation violations are retried up to
/// `max_attempts`; exhausting the budget on violations is a generation
/// failure, while never parsing enough candidates marks the item degenerate.
pub fn generate_misleading_options(
    item: &SourceItem,
    k: usize,
    backend: &dyn GenerationBackend,
    max_attempts: usize,
) -> Result<Vec<String>, BuilderError> {
    if k == 0 {
        return Err(BuilderError::InvalidItem("k must be >= 1".into()));
    }
    if item.task_kind != TaskKind::Mrc {
        return Err(BuilderError::InvalidItem(
            "option generation is for MRC items; commonsense items reuse existing distractors"
                .into(),
        ));
    }
    let prompt = generation::choices_prompt(k, &item.question, &item.golden_answer);
    let golden_norm = item.golden_answer.trim().to_lowercase();
    let mut parsed_enough = false;
    for _ in 0..max_attempts.max(1) {
        let response = backend.generate(&prompt)?;
        let candidates = parse_candidate_list(&response);
        if candidates.len() >= k {
            parsed_enough = true;
        }
        let mut seen = std::collections::HashSet::new();
        let valid: Vec<String> = candidates
            .into_iter()
            .filter(|c| {
                let norm = c.trim().to_lowercase();
                norm != golden_norm && !norm.is_empty() && seen.insert(norm)
            })
            .collect();
        if valid.len() >= k {
            return Ok(valid.into_iter().take(k).collect());
        }
    }
    if parsed_enough {
        Err(BuilderError::Generation(format!(
            "no {k} valid distractors after {max_attempts} attempt(s) for '{}'",
            item.golden_answer
        )))
    } else {
        Err(BuilderError::DegenerateItem(format!(
            "could not parse {k} distinct distractors for '{}'",
            item.golden_answer
        )))
    }
}

// ---------------------------------------------------------------------------
// Negative answer selection
// ---------------------------------------------------------------------------

/// Outcome of negative-answer selection: the chosen text plus the final
/// shuffled letter layout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NegativeSelection {
    pub negative_text: String,
    pub options: BTreeMap<OptionLetter, String>,
    pub golden: OptionLetter,
    pub negative: OptionLetter,
}

/// Pick the negative answer uniformly among the misleading options and lay
/// out all options under a seeded shuffle.
pub fn select_negative_answer(
    misleading: &[String],
    golden_answer: &str,
    seed: u64,
) -> Result<NegativeSelection, BuilderError> {
    if misleading.is_empty() {
        return Err(BuilderError::EmptyOptions);
    }
    let total = misleading.len() + 1;
    if total > OptionLetter::MAX_OPTIONS {
        return Err(BuilderError::InvalidItem(format!(
            "{total} options exceed the {} letter limit",
            OptionLetter::MAX_OPTIONS
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let negative_idx = rng.gen_range(0..misleading.len());
    // Track entries by origin index; texts are not assumed unique.
    let mut entries: Vec<(usize, &str)> = Vec::with_capacity(total);
    entries.push((0, golden_answer));
    for (i, m) in misleading.iter().enumerate() {
        entries.push((i + 1, m.as_str()));
    }
    entries.shuffle(&mut rng);
    let mut options = BTreeMap::new();
    let mut golden = None;
    let mut negative = None;
    for (pos, (origin, text)) in entries.iter().enumerate() {
        let letter = OptionLetter::from_index(pos).expect("total <= 5");
        options.insert(letter, text.to_string());
        if *origin == 0 {
            golden = Some(letter);
        }
        if *origin == negative_idx + 1 {
            negative = Some(letter);
        }
    }
    Ok(NegativeSelection {
        negative_text: misleading[negative_idx].clone(),
        options,
        golden: golden.expect("golden placed"),
        negative: negative.expect("negative placed"),
    })
}

// ---------------------------------------------------------------------------
// Negative contexts
// ---------------------------------------------------------------------------

/// Negative context for a reading-comprehension item. The primary path is
/// exact entity substitution; a backend switches to rewrite-style generation,
/// whose output must contain the negative answer and drop the golden one.
pub fn build_negative_context_mrc(
    golden_context: &str,
    golden_answer: &str,
    negative_answer: &str,
    backend: Option<&dyn GenerationBackend>,
) -> Result<String, BuilderError> {
    match backend {
        None => substitute_entity(golden_context, golden_answer, negative_answer),
        Some(b) => {
            let prompt =
                generation::rewrite_prompt(golden_context, golden_answer, negative_answer);
            let out = b.generate(&prompt)?;
            let lower = out.to_lowercase();
            if out.trim().is_empty() {
                return Err(BuilderError::RewriteInvalid("empty rewrite".into()));
            }
            if !lower.contains(&negative_answer.trim().to_lowercase()) {
                return Err(BuilderError::RewriteInvalid(format!(
                    "rewrite does not mention the negative answer '{negative_answer}'"
                )));
            }
            if lower.contains(&golden_answer.trim().to_lowercase()) {
                return Err(BuilderError::RewriteInvalid(format!(
                    "rewrite still contains the golden answer '{golden_answer}'"
                )));
            }
            Ok(out)
        }
    }
}

/// Negative context for a commonsense item: a generated explanation that
/// must mention the negative answer.
pub fn build_negative_context_cr(
    question: &str,
    negative_answer: &str,
    backend: &dyn GenerationBackend,
) -> Result<String, BuilderError> {
    let prompt = generation::explanation_prompt(question, negative_answer);
    let out = backend.generate(&prompt)?;
    if out.trim().is_empty() {
        return Err(BuilderError::RewriteInvalid("empty explanation".into()));
    }
    if !out
        .to_lowercase()
        .contains(&negative_answer.trim().to_lowercase())
    {
        return Err(BuilderError::RewriteInvalid(format!(
            "explanation does not mention the negative answer '{negative_answer}'"
        )));
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Full construction
// ---------------------------------------------------------------------------

/// Knobs for dataset construction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BuildOptions {
    /// Misleading options generated per MRC item.
    pub distractors: usize,
    /// Generation retry budget per item.
    pub max_attempts: usize,
    pub seed: u64,
    /// Use the backend to rewrite MRC contexts instead of substitution.
    pub rewrite_with_backend: bool,
}

impl Default for BuildOptions {
    fn default() -> Self {
        BuildOptions {
            distractors: 3,
            max_attempts: 3,
            seed: 0,
            rewrite_with_backend: false,
        }
    }
}

fn item_seed(base: u64, id: &str) -> u64 {
    let mut hasher = Sha256::new();
    hasher.update(base.to_le_bytes());
    hasher.update(id.as_bytes());
    let digest = hasher.finalize();
    u64::from_le_bytes(digest[..8].try_into().expect("8 bytes"))
}

/// Build one conflict sample from a source item.
pub fn build_sample(
    item: &SourceItem,
    index: usize,
    backend: &dyn GenerationBackend,
    opts: &BuildOptions,
) -> Result<ConflictSample, BuilderError> {
    item.validate()?;
    let id = item
        .id
        .clone()
        .unwrap_or_else(|| format!("{}-{:04}", item.corpus.name().to_lowercase(), index + 1));
    let distractors = match item.task_kind {
        TaskKind::Mrc => {
            generate_misleading_options(item, opts.distractors, backend, opts.max_attempts)?
        }
        TaskKind::Cr => item
            .existing_distractors
            .clone()
            .filter(|d| !d.is_empty())
            .ok_or_else(|| {
                BuilderError::InvalidItem(format!(
                    "commonsense item '{id}' is missing existing_distractors"
                ))
            })?,
    };
    let selection = select_negative_answer(
        &distractors,
        item.golden_answer.trim(),
        item_seed(opts.seed, &id),
    )?;
    let negative_context = match item.task_kind {
        TaskKind::Mrc => build_negative_context_mrc(
            &item.golden_context,
            &item.golden_answer,
            &selection.negative_text,
            opts.rewrite_with_backend.then_some(backend),
        )?,
        TaskKind::Cr => {
            build_negative_context_cr(&item.question, &selection.negative_text, backend)?
        }
    };
    Ok(ConflictSample {
        id,
        corpus: item.corpus,
        task_kind: item.task_kind,
        question: item.question.clone(),
        options: selection.options,
        golden: selection.golden,
        negative: selection.negative,
        positive_context: item.golden_context.clone(),
        negative_context,
        answerable: item.answerable,
    })
}

/// Build a whole dataset; fails on the first bad item.
pub fn build_dataset(
    name: &str,
    items: &[SourceItem],
    backend: &dyn GenerationBackend,
    opts: &BuildOptions,
) -> Result<SampleSet, BuilderError> {
    let mut samples = Vec::with_capacity(items.len());
    for (i, item) in items.iter().enumerate() {
        samples.push(build_sample(item, i, backend, opts)?);
    }
    SampleSet::new(
        name,
        format!("built from {} source items, seed={}", items.len(), opts.seed),
        samples,
    )
    .map_err(|e| BuilderError::InvalidItem(e.to_string()))
}

// ---------------------------------------------------------------------------
// Annotation sheet
// ---------------------------------------------------------------------------

/// Rubric levels for external review of negative contexts; rendered into the
/// sheet's rating column header.
pub const ANNOTATION_RUBRIC: [&str; 3] =
    ["No-misleading", "Somewhat misleading", "Highly misleading"];

/// CSV sheet of a seeded sample of rows for external annotation.
pub fn annotation_sheet_csv(set: &SampleSet, n: usize, seed: u64) -> Result<String, BuilderError> {
    if n > set.len() {
        return Err(BuilderError::SampleTooLarge {
            requested: n,
            available: set.len(),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let picked = rand::seq::index::sample(&mut rng, set.len(), n);
    let mut writer = csv::Writer::from_writer(Vec::new());
    writer.write_record([
        "id",
        "question",
        "negative_context",
        "options",
        "negative_answer",
        &format!("rating ({})", ANNOTATION_RUBRIC.join(" | ")),
    ])?;
    for idx in picked.iter() {
        let s = &set.samples()[idx];
        let options = s
            .options
            .iter()
            .map(|(l, t)| format!("{l}: {t}"))
            .collect::<Vec<_>>()
            .join(" ");
        writer.write_record([
            s.id.as_str(),
            s.question.as_str(),
            s.negative_context.as_str(),
            options.as_str(),
            s.negative_text(),
            "",
        ])?;
    }
    let bytes = writer.into_inner().map_err(|e| {
        BuilderError::InvalidItem(format!("csv flush: {e}"))
    })?;
    String::from_utf8(bytes).map_err(|e| BuilderError::InvalidItem(e.to_string()))
}

/// Write the annotation sheet to disk.
pub fn export_annotation_sheet(
    set: &SampleSet,
    n: usize,
    seed: u64,
    path: &Path,
) -> Result<(), BuilderError> {
    let csv = annotation_sheet_csv(set, n, seed)?;
    std::fs::write(path, csv)?;
    Ok(())
}
