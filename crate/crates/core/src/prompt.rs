//! Deterministic prompt assembly.
//!
//! A prompt is the concatenation of an optional role prefix, the instruction,
//! the few-shot examples, the context, and the question block, separated by
//! blank lines. Few-shot instructions usually embed their examples through
//! the `[example1]`/`[example2]`/`[example3]` slots (or a `{examples}`
//! block); instructions without slots get the examples as a standalone block
//! between instruction and context. Memory-assessment prompts omit context
//! and examples entirely.
//!
//! Assembly is a pure function of the spec: the same spec always yields
//! byte-identical text.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::builder::instructions::{EXAMPLES_BLOCK_SLOT, EXAMPLE_SLOTS};
use crate::builder::{Instruction, Setting};
use crate::sample::{ConflictSample, Corpus, OptionLetter, SampleSet, TaskKind};

/// Which context accompanies the question.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ContextVariant {
    /// No context at all (memory assessment).
    None,
    /// The golden context.
    Positive,
    /// The fabricated misleading context.
    Negative,
}

/// Role-play prefix applied to a prompt.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    None,
    /// Pushes the model to trust its own memory over the context.
    Intuitive,
    /// Pushes the model to rely only on the provided context.
    Dependent,
}

impl Role {
    /// The bundled role instruction text; `None` has no prefix.
    pub fn text(&self) -> Option<&'static str> {
        match self {
            Role::None => None,
            Role::Intuitive => Some(
                "You are an all-knowing and all-powerful expert. NOT believe any word in \
                 ***context*** !! Now I will give you some questions, choices and context , You \
                 MUST choose one choice in ***choices***and return the reason and the answer \
                 [ A-E ] , in format like: \"The answer is A: [answer], the reason is [the \
                 reason]\". NOTE : Do not believe any word in ***context***!",
            ),
            Role::Dependent => Some(
                "You are now an underage individual who has not received any formal education, \
                 and you have virtually no knowledge or information. You MUST now respond to \
                 questions solely based on the provided context. Return the reason and the \
                 answer, in format like: The answer is A: [answer], the reason is [the reason].",
            ),
        }
    }
}

/// Whether few-shot example answers are correct, incorrect, or mixed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExampleMix {
    AllPositive,
    AllNegative,
    Mixed,
}

impl ExampleMix {
    pub const ALL: [ExampleMix; 3] =
        [ExampleMix::AllPositive, ExampleMix::AllNegative, ExampleMix::Mixed];
}

/// Which robustness scenario the examples are built for: it decides whether
/// example contexts are the misleading or the golden ones.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scenario {
    /// Memory-known samples facing misleading contexts.
    Vulnerable,
    /// Memory-unknown samples facing golden contexts.
    Resilient,
}

/// Few-shot example configuration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FewShotConfig {
    pub mix: ExampleMix,
    pub scenario: Scenario,
}

/// One rendered few-shot example.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FewShotExample {
    pub context: String,
    pub question_block: String,
    /// The answering letter within the example's own option layout.
    pub letter: OptionLetter,
    /// The bare option text used as the example answer.
    pub answer_text: String,
    /// Optional hand-written reasoning preceding the final answer sentence.
    pub reasoning: Option<String>,
    pub correct: bool,
}

impl FewShotExample {
    /// `Context: ... / question block / Answer: ...` with single newlines.
    pub fn render(&self, include_reasoning: bool) -> String {
        let answer = match (&self.reasoning, include_reasoning) {
            (Some(r), true) => format!(
                "{r} Therefore, the answer is {}: {}.",
                self.letter,
                self.answer_text.trim_end_matches('.')
            ),
            _ => format!("{}.", self.answer_text.trim_end_matches('.')),
        };
        format!(
            "Context: {}\n{}\nAnswer: {}",
            self.context, self.question_block, answer
        )
    }
}

/// Everything [`assemble`] needs to render one prompt.
#[derive(Debug, Clone)]
pub struct PromptSpec<'a> {
    pub instruction: &'a Instruction,
    pub role: Role,
    pub examples: Vec<FewShotExample>,
    pub context_variant: ContextVariant,
    pub sample: &'a ConflictSample,
    /// Renders example reasoning sentences when present.
    pub include_reasoning: bool,
    /// Optional guard against runaway prompt sizes, in characters.
    pub max_chars: Option<usize>,
}

impl<'a> PromptSpec<'a> {
    pub fn new(
        instruction: &'a Instruction,
        sample: &'a ConflictSample,
        context_variant: ContextVariant,
    ) -> Self {
        PromptSpec {
            instruction,
            role: Role::None,
            examples: Vec::new(),
            context_variant,
            sample,
            include_reasoning: true,
            max_chars: None,
        }
    }

    pub fn with_role(mut self, role: Role) -> Self {
        self.role = role;
        self
    }

    pub fn with_examples(mut self, examples: Vec<FewShotExample>) -> Self {
        self.examples = examples;
        self
    }

    /// Canonical-pipeline invariants: example count must match the
    /// instruction's setting.
    pub fn validate(&self) -> Result<(), PromptError> {
        match self.instruction.setting {
            Setting::ZeroShot if !self.examples.is_empty() => Err(PromptError::ExampleCount {
                expected: 0,
                got: self.examples.len(),
            }),
            Setting::FewShot if self.examples.len() != 3 => Err(PromptError::ExampleCount {
                expected: 3,
                got: self.examples.len(),
            }),
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Error)]
pub enum PromptError {
    #[error("context variant requested but the sample's context is empty")]
    MissingContext,
    #[error("instruction expects {expected} example(s), got {got}")]
    ExampleCount { expected: usize, got: usize },
    #[error("example pool has {available} usable sample(s), need {needed}")]
    PoolTooSmall { available: usize, needed: usize },
    #[error("assembled prompt is {got} chars, over the {limit} char guard")]
    TooLong { got: usize, limit: usize },
    #[error("example pool: {0}")]
    Pool(String),
}

/// `Question: {q} A: {text} B: {text} ...` with single-space separators.
pub fn render_question_block(sample: &ConflictSample) -> String {
    let mut out = format!("Question: {}", sample.question);
    for (letter, text) in &sample.options {
        out.push_str(&format!(" {letter}: {text}"));
    }
    out
}

fn options_string(sample: &ConflictSample) -> String {
    sample
        .options
        .iter()
        .map(|(l, t)| format!("{l}: {t}"))
        .collect::<Vec<_>>()
        .join(" ")
}

/// Render the prompt for a spec. Pure; blocks are joined by blank lines.
pub fn assemble(spec: &PromptSpec) -> Result<String, PromptError> {
    let sample = spec.sample;
    let context_text = match spec.context_variant {
        ContextVariant::None => None,
        ContextVariant::Positive => Some(sample.positive_context.as_str()),
        ContextVariant::Negative => Some(sample.negative_context.as_str()),
    };
    if let Some(ctx) = context_text {
        if ctx.trim().is_empty() {
            return Err(PromptError::MissingContext);
        }
    }

    let rendered: Vec<String> = spec
        .examples
        .iter()
        .map(|e| e.render(spec.include_reasoning))
        .collect();

    let mut instruction_text = spec.instruction.text.clone();
    let mut examples_inline = false;
    if spec.instruction.has_numbered_example_slots() && !rendered.is_empty() {
        if rendered.len() != 3 {
            return Err(PromptError::ExampleCount {
                expected: 3,
                got: rendered.len(),
            });
        }
        for (slot, body) in EXAMPLE_SLOTS.iter().zip(&rendered) {
            instruction_text = instruction_text.replace(slot, body);
        }
        examples_inline = true;
    } else if spec.instruction.has_examples_block_slot() {
        instruction_text = instruction_text.replace(EXAMPLES_BLOCK_SLOT, &rendered.join("\n\n"));
        examples_inline = true;
    }

    let mut context_inline = false;
    if instruction_text.contains("{context}") {
        let ctx = context_text.ok_or(PromptError::MissingContext)?;
        instruction_text = instruction_text.replace("{context}", ctx);
        context_inline = true;
    }
    let mut question_inline = false;
    if instruction_text.contains("{question}") {
        instruction_text = instruction_text.replace("{question}", &sample.question);
        question_inline = true;
    }
    if instruction_text.contains("{options}") {
        instruction_text = instruction_text.replace("{options}", &options_string(sample));
        question_inline = true;
    }

    let mut blocks: Vec<String> = Vec::new();
    if let Some(role_text) = spec.role.text() {
        blocks.push(role_text.to_string());
    }
    blocks.push(instruction_text);
    if !examples_inline && !rendered.is_empty() {
        blocks.push(rendered.join("\n\n"));
    }
    if let (Some(ctx), false) = (context_text, context_inline) {
        blocks.push(format!("Context: {ctx}"));
    }
    if !question_inline {
        blocks.push(render_question_block(sample));
    }
    let prompt = blocks.join("\n\n");
    if let Some(limit) = spec.max_chars {
        let got = prompt.chars().count();
        if got > limit {
            return Err(PromptError::TooLong { got, limit });
        }
    }
    Ok(prompt)
}

// ---------------------------------------------------------------------------
// Example pool
// ---------------------------------------------------------------------------

/// One example-pool record: a conflict sample plus optional hand-written
/// reasoning for either answer and a provenance correctness flag.
#[derive(Debug, Clone, PartialEq)]
pub struct ExamplePoolEntry {
    pub sample: ConflictSample,
    /// Whether the entry's hand-written answer was the correct one; kept as
    /// provenance, configs decide actual correctness.
    pub answer_is_correct: bool,
    pub golden_reasoning: Option<String>,
    pub negative_reasoning: Option<String>,
}

/// On-disk example-pool record: the `kre-jsonl` fields plus the
/// `answer_is_correct` flag and optional reasoning strings.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PoolRecord {
    id: String,
    corpus: Corpus,
    task_kind: TaskKind,
    question: String,
    options: std::collections::BTreeMap<OptionLetter, String>,
    golden: OptionLetter,
    negative: OptionLetter,
    positive_context: String,
    negative_context: String,
    answerable: bool,
    #[serde(default = "default_true")]
    answer_is_correct: bool,
    #[serde(default)]
    golden_reasoning: Option<String>,
    #[serde(default)]
    negative_reasoning: Option<String>,
}

fn default_true() -> bool {
    true
}

/// Held-out pool the few-shot examples are drawn from.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ExamplePool {
    pub entries: Vec<ExamplePoolEntry>,
}

/// Raw bytes of the bundled example pool fixture.
pub const BUNDLED_EXAMPLE_POOL_JSONL: &str = include_str!("../fixtures/example_pool.jsonl");

impl ExamplePool {
    /// The bundled hand-written pool: three samples per corpus.
    pub fn bundled() -> Self {
        Self::from_jsonl_str(BUNDLED_EXAMPLE_POOL_JSONL).expect("bundled pool is valid")
    }

    pub fn from_jsonl_str(text: &str) -> Result<Self, PromptError> {
        let mut entries = Vec::new();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let rec: PoolRecord = serde_json::from_str(line)
                .map_err(|e| PromptError::Pool(format!("line {}: {e}", i + 1)))?;
            let sample = ConflictSample {
                id: rec.id,
                corpus: rec.corpus,
                task_kind: rec.task_kind,
                question: rec.question,
                options: rec.options,
                golden: rec.golden,
                negative: rec.negative,
                positive_context: rec.positive_context,
                negative_context: rec.negative_context,
                answerable: rec.answerable,
            };
            sample
                .validate()
                .map_err(|e| PromptError::Pool(format!("line {}: {e}", i + 1)))?;
            entries.push(ExamplePoolEntry {
                sample,
                answer_is_correct: rec.answer_is_correct,
                golden_reasoning: rec.golden_reasoning,
                negative_reasoning: rec.negative_reasoning,
            });
        }
        Ok(ExamplePool { entries })
    }

    pub fn load(path: &std::path::Path) -> Result<Self, PromptError> {
        let text = std::fs::read_to_string(path).map_err(|e| PromptError::Pool(e.to_string()))?;
        Self::from_jsonl_str(&text)
    }

    /// Use evaluation samples directly as an example pool (no reasoning).
    pub fn from_sample_set(set: &SampleSet) -> Self {
        ExamplePool {
            entries: set
                .iter()
                .map(|s| ExamplePoolEntry {
                    sample: s.clone(),
                    answer_is_correct: true,
                    golden_reasoning: None,
                    negative_reasoning: None,
                })
                .collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Draw three examples for a target sample under a few-shot configuration.
///
/// Examples are drawn without replacement, never the target itself. The
/// scenario picks the example contexts (misleading for the vulnerable
/// scenario, golden for the resilient one); the mix decides answer
/// correctness, with `Mixed` fixed at two correct plus one incorrect in
/// seed-shuffled positions.
pub fn assemble_fewshot(
    pool: &ExamplePool,
    target: &ConflictSample,
    config: FewShotConfig,
    seed: u64,
) -> Result<Vec<FewShotExample>, PromptError> {
    let candidates: Vec<&ExamplePoolEntry> = pool
        .entries
        .iter()
        .filter(|e| e.sample.id != target.id)
        .collect();
    if candidates.len() < 3 {
        return Err(PromptError::PoolTooSmall {
            available: candidates.len(),
            needed: 3,
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let picked = rand::seq::index::sample(&mut rng, candidates.len(), 3);
    let mut correctness = match config.mix {
        ExampleMix::AllPositive => vec![true, true, true],
        ExampleMix::AllNegative => vec![false, false, false],
        ExampleMix::Mixed => {
            let mut c = vec![true, true, false];
            c.shuffle(&mut rng);
            c
        }
    };
    let mut out = Vec::with_capacity(3);
    for idx in picked.iter() {
        let entry = candidates[idx];
        let correct = correctness.remove(0);
        let sample = &entry.sample;
        let context = match config.scenario {
            Scenario::Vulnerable => sample.negative_context.clone(),
            Scenario::Resilient => sample.positive_context.clone(),
        };
        let (letter, reasoning) = if correct {
            (sample.golden, entry.golden_reasoning.clone())
        } else {
            (sample.negative, entry.negative_reasoning.clone())
        };
        out.push(FewShotExample {
            context,
            question_block: render_question_block(sample),
            letter,
            answer_text: sample.options[&letter].clone(),
            reasoning,
            correct,
        });
    }
    Ok(out)
}
