//! The five-stage evaluation pipeline.
//!
//! 1. [`Evaluator::assess_memory`] asks every question with no context and
//!    partitions samples into memory-known (`D+`, answered with the golden
//!    letter) and memory-unknown (`D-`, wrong or invalid).
//! 2. [`Evaluator::select_instruction`] scores every pool instruction on a
//!    stratified subset and keeps the most robust one per (setting, hint)
//!    group.
//! 3. [`Evaluator::eval_robustness`] measures vulnerable robustness (VR: the
//!    fraction of `D+` still answered correctly under the misleading
//!    context), resilient robustness (RR: the fraction of `D-` answered
//!    correctly under the golden context), and FR = (VR + RR) / 2; few-shot
//!    mode averages each question over the three example mixes.
//! 4. [`compute_dmss`] reduces the zero-shot conflict outcomes to a decision
//!    style score in [-1, 1] (+1 memory-driven, -1 prompt-driven) and
//!    [`classify_style`] labels it.
//! 5. [`Evaluator::run_role_intervention`] repeats the conflict evaluation
//!    under intuitive/dependent role prefixes, yielding adaptivity (the DMSS
//!    range across roles) and the best-case FR upper bound.
//!
//! Invalid verdicts never count as matches anywhere, including the
//! memory-consistency test inside the style score. Samples whose transport
//! failed are excluded from denominators and reported, never silently
//! scored.

pub mod ledger;

use std::collections::BTreeMap;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::builder::{Instruction, InstructionPool, Setting};
use crate::gateway::replay::prompt_hash;
use crate::gateway::{
    batch_complete, CompletionBackend, CompletionRequest, Condition, Phase, RateLimiter,
};
use crate::parser::{parse_choice, Verdict};
use crate::prompt::{
    assemble, assemble_fewshot, ContextVariant, ExampleMix, ExamplePool, FewShotConfig,
    PromptError, PromptSpec, Role, Scenario,
};
use crate::sample::{ConflictSample, SampleSet};

pub use ledger::{Ledger, LedgerEntry, LedgerHeader};

#[derive(Debug, Error)]
pub enum EngineError {
    #[error("empty partition: {0}")]
    EmptyPartition(String),
    #[error("missing conflict outcome for sample '{0}'")]
    MissingOutcome(String),
    #[error("sample '{0}' not present in the sample set")]
    UnknownSample(String),
    #[error("prompt for sample '{sample_id}' under '{condition}' changed since the ledger was written")]
    LedgerConflict { sample_id: String, condition: String },
    #[error("ledger: {0}")]
    Ledger(String),
    #[error("instruction '{id}': {reason}")]
    Instruction { id: String, reason: String },
    #[error("prompt: {0}")]
    Prompt(#[from] PromptError),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("serialization: {0}")]
    Json(#[from] serde_json::Error),
}

// ---------------------------------------------------------------------------
// Memory profile
// ---------------------------------------------------------------------------

/// Which side of the memory partition a sample fell on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Membership {
    DPlus,
    DMinus,
}

/// Per-model record of the no-context pass.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MemoryProfile {
    pub model: String,
    /// No-context verdict per assessed sample.
    pub answers: BTreeMap<String, Verdict>,
    pub partition: BTreeMap<String, Membership>,
    /// Samples dropped because their request failed.
    pub excluded: Vec<String>,
}

impl MemoryProfile {
    pub fn dplus_count(&self) -> usize {
        self.partition.values().filter(|m| **m == Membership::DPlus).count()
    }

    pub fn dminus_count(&self) -> usize {
        self.partition.values().filter(|m| **m == Membership::DMinus).count()
    }

    pub fn membership(&self, id: &str) -> Option<Membership> {
        self.partition.get(id).copied()
    }

    /// Fraction of assessed samples answered with the golden letter.
    pub fn accuracy(&self) -> Option<f64> {
        if self.partition.is_empty() {
            return None;
        }
        Some(self.dplus_count() as f64 / self.partition.len() as f64)
    }

    /// Accuracy split by source corpus.
    pub fn per_corpus_accuracy(&self, set: &SampleSet) -> BTreeMap<String, f64> {
        let mut totals: BTreeMap<String, (usize, usize)> = BTreeMap::new();
        for s in set.iter() {
            if let Some(m) = self.membership(&s.id) {
                let e = totals.entry(s.corpus.name().to_string()).or_insert((0, 0));
                e.1 += 1;
                if m == Membership::DPlus {
                    e.0 += 1;
                }
            }
        }
        totals
            .into_iter()
            .map(|(c, (hit, n))| (c, hit as f64 / n as f64))
            .collect()
    }

    /// The profile restricted to samples of `subset`.
    pub fn restricted_to(&self, subset: &SampleSet) -> MemoryProfile {
        MemoryProfile {
            model: self.model.clone(),
            answers: subset
                .iter()
                .filter_map(|s| self.answers.get(&s.id).map(|v| (s.id.clone(), *v)))
                .collect(),
            partition: subset
                .iter()
                .filter_map(|s| self.partition.get(&s.id).map(|m| (s.id.clone(), *m)))
                .collect(),
            excluded: Vec::new(),
        }
    }

    pub fn save(&self, path: &Path) -> Result<(), EngineError> {
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        std::fs::write(path, text)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, EngineError> {
        Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
    }
}

// ---------------------------------------------------------------------------
// Scores
// ---------------------------------------------------------------------------

/// FR is the mean of VR and RR; undefined when either side is undefined.
pub fn fr_from(vr: Option<f64>, rr: Option<f64>) -> Option<f64> {
    Some((vr? + rr?) / 2.0)
}

/// Per-corpus VR/RR breakdown.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusScores {
    pub vr: Option<f64>,
    pub rr: Option<f64>,
    pub fr: Option<f64>,
    pub n_dplus: usize,
    pub n_dminus: usize,
}

/// Robustness scores for one condition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RobustnessScores {
    /// Condition label, e.g. `zs`, `fs`, `role:intuitive`.
    pub condition: String,
    pub vr: Option<f64>,
    pub rr: Option<f64>,
    pub fr: Option<f64>,
    pub n_dplus: usize,
    pub n_dminus: usize,
    /// Samples excluded for transport failure.
    pub excluded: usize,
    /// Misleading-answer picks in the vulnerable setting.
    pub misleading_count: usize,
    /// Invalid responses across both settings.
    pub invalid_count: usize,
    pub per_corpus: BTreeMap<String, CorpusScores>,
    /// Few-shot only: per-mix VR/RR.
    pub per_mix: Option<BTreeMap<String, MixScores>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixScores {
    pub vr: Option<f64>,
    pub rr: Option<f64>,
}

/// Zero-shot conflict verdicts, keyed by sample id: `D+` samples under the
/// misleading context, `D-` samples under the golden context. Reused by the
/// style score.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ConflictOutcomes {
    pub by_sample: BTreeMap<String, Verdict>,
}

/// Decision style labels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Style {
    Dependent,
    Intuitive,
    Rational,
    Irrational,
}

impl std::fmt::Display for Style {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Style::Dependent => "Dependent",
            Style::Intuitive => "Intuitive",
            Style::Rational => "Rational",
            Style::Irrational => "Irrational",
        })
    }
}

/// Style classification cut-offs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct StyleThresholds {
    /// Style score at or above this is intuitive.
    pub intuitive_min: f64,
    /// Style score at or below this is dependent.
    pub dependent_max: f64,
    /// In-between scores are rational when FR reaches this, else irrational.
    pub rational_fr_min: f64,
}

impl Default for StyleThresholds {
    fn default() -> Self {
        StyleThresholds {
            intuitive_min: 0.20,
            dependent_max: -0.20,
            rational_fr_min: 0.50,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StyleVerdict {
    pub dmss: f64,
    pub style: Style,
    pub thresholds: StyleThresholds,
}

/// Scores plus style score for one role condition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionMetrics {
    pub scores: RobustnessScores,
    pub dmss: f64,
}

/// Role-play intervention result.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InterventionSummary {
    pub baseline: ConditionMetrics,
    pub intuitive: ConditionMetrics,
    pub dependent: ConditionMetrics,
    /// DMSS range between the intuitive and dependent roles.
    pub adaptivity: f64,
    /// Mean of the best per-condition VR and RR across the three conditions.
    pub fr_upper: Option<f64>,
}

/// Scores of one instruction during selection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionScore {
    pub instruction_id: String,
    pub fr: Option<f64>,
    pub invalid_count: usize,
}

/// Winner and full score table for one (setting, hint) group.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupSelection {
    pub setting: Setting,
    pub hint: bool,
    pub best_id: String,
    pub scores: Vec<SelectionScore>,
}

// ---------------------------------------------------------------------------
// Style score
// ---------------------------------------------------------------------------

/// Decision-making style score over the zero-shot conflict outcomes.
///
/// Per sample the contribution is +1 when the model held its line (memory
/// answer on `D+` despite the misleading context; the remembered wrong answer
/// on `D-` despite the golden context), -1 when the prompt flipped it (the
/// misleading answer on `D+`; the golden answer on `D-`), else 0; the score
/// is the mean. Invalid verdicts match nothing, including other invalids.
pub fn compute_dmss(
    profile: &MemoryProfile,
    outcomes: &ConflictOutcomes,
    set: &SampleSet,
) -> Result<f64, EngineError> {
    if profile.partition.is_empty() {
        return Err(EngineError::EmptyPartition("no assessed samples".into()));
    }
    let mut plus = 0i64;
    let mut minus = 0i64;
    for (id, membership) in &profile.partition {
        let sample = set
            .get(id)
            .ok_or_else(|| EngineError::UnknownSample(id.clone()))?;
        let verdict = outcomes
            .by_sample
            .get(id)
            .ok_or_else(|| EngineError::MissingOutcome(id.clone()))?;
        match membership {
            Membership::DPlus => match verdict {
                Verdict::Choice(l) if *l == sample.golden => plus += 1,
                Verdict::Choice(l) if *l == sample.negative => minus += 1,
                _ => {}
            },
            Membership::DMinus => {
                let memory = profile
                    .answers
                    .get(id)
                    .ok_or_else(|| EngineError::MissingOutcome(id.clone()))?;
                if let (Verdict::Choice(v), Verdict::Choice(m)) = (verdict, memory) {
                    if v == m {
                        plus += 1;
                    }
                }
                if let Verdict::Choice(l) = verdict {
                    if *l == sample.golden {
                        minus += 1;
                    }
                }
            }
        }
    }
    Ok((plus - minus) as f64 / profile.partition.len() as f64)
}

/// Label a style score, using FR to split rational from irrational middles.
pub fn classify_style(dmss: f64, fr: Option<f64>, thresholds: &StyleThresholds) -> Style {
    if dmss >= thresholds.intuitive_min {
        Style::Intuitive
    } else if dmss <= thresholds.dependent_max {
        Style::Dependent
    } else if fr.is_some_and(|f| f >= thresholds.rational_fr_min) {
        Style::Rational
    } else {
        Style::Irrational
    }
}

// ---------------------------------------------------------------------------
// Evaluator
// ---------------------------------------------------------------------------

/// Execution knobs shared by all stages.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EngineOptions {
    pub parallelism: usize,
    pub rate_per_minute: Option<u32>,
    /// Render hand-written reasoning inside few-shot examples.
    pub include_reasoning: bool,
    /// Character guard on assembled prompts.
    pub max_prompt_chars: Option<usize>,
    /// Base seed for few-shot example draws.
    pub fewshot_seed: u64,
}

impl Default for EngineOptions {
    fn default() -> Self {
        EngineOptions {
            parallelism: 1,
            rate_per_minute: None,
            include_reasoning: true,
            max_prompt_chars: None,
            fewshot_seed: 0,
        }
    }
}

/// Stage driver: plans prompts, consults the ledger, batches what is
/// missing, parses, and appends new ledger entries in request order.
pub struct Evaluator<'a> {
    backend: &'a dyn CompletionBackend,
    options: EngineOptions,
    ledger: Ledger,
    limiter: Option<RateLimiter>,
    /// Requests actually sent to the backend.
    pub backend_calls: usize,
    /// Requests satisfied from the ledger.
    pub ledger_hits: usize,
}

struct Planned<'s> {
    sample: &'s ConflictSample,
    condition: Condition,
    prompt: String,
}

impl<'a> Evaluator<'a> {
    pub fn new(backend: &'a dyn CompletionBackend, options: EngineOptions, ledger: Ledger) -> Self {
        let limiter = options.rate_per_minute.map(RateLimiter::per_minute);
        Evaluator {
            backend,
            options,
            ledger,
            limiter,
            backend_calls: 0,
            ledger_hits: 0,
        }
    }

    /// Throwaway evaluator with an in-memory ledger.
    pub fn in_memory(backend: &'a dyn CompletionBackend, options: EngineOptions) -> Self {
        let header = LedgerHeader {
            model: backend.model_name().to_string(),
            config_hash: "adhoc".to_string(),
            seed: 0,
            parser_version: crate::parser::PARSER_VERSION.to_string(),
        };
        Self::new(backend, options, Ledger::new(header))
    }

    pub fn ledger(&self) -> &Ledger {
        &self.ledger
    }

    /// Resolve planned requests: ledger first, then one bounded batch.
    /// `None` marks a transport failure (excluded sample).
    fn execute(&mut self, planned: &[Planned]) -> Result<Vec<Option<Verdict>>, EngineError> {
        let mut resolved: Vec<Option<Verdict>> = vec![None; planned.len()];
        let mut to_send: Vec<usize> = Vec::new();
        for (i, p) in planned.iter().enumerate() {
            let tag = p.condition.tag();
            let hash = prompt_hash(&p.prompt);
            match self.ledger.lookup(&p.sample.id, &tag) {
                Some(entry) => {
                    if entry.prompt_hash != hash {
                        return Err(EngineError::LedgerConflict {
                            sample_id: p.sample.id.clone(),
                            condition: tag,
                        });
                    }
                    self.ledger_hits += 1;
                    resolved[i] = Some(entry.verdict);
                }
                None => to_send.push(i),
            }
        }
        if to_send.is_empty() {
            return Ok(resolved);
        }
        let requests: Vec<CompletionRequest> = to_send
            .iter()
            .map(|&i| CompletionRequest {
                sample_id: planned[i].sample.id.clone(),
                condition: planned[i].condition.clone(),
                prompt: planned[i].prompt.clone(),
            })
            .collect();
        self.backend_calls += requests.len();
        let responses = batch_complete(
            &requests,
            self.backend,
            self.options.parallelism,
            self.limiter.as_ref(),
        );
        let mut new_entries = Vec::new();
        for (k, &i) in to_send.iter().enumerate() {
            match &responses[k] {
                Ok(raw) => {
                    let parsed = parse_choice(&raw.text, planned[i].sample);
                    new_entries.push(LedgerEntry {
                        sample_id: planned[i].sample.id.clone(),
                        condition: planned[i].condition.tag(),
                        prompt_hash: prompt_hash(&planned[i].prompt),
                        response: raw.text.clone(),
                        verdict: parsed.verdict,
                        match_rule: parsed.match_rule,
                    });
                    resolved[i] = Some(parsed.verdict);
                }
                Err(_) => {
                    // Excluded sample; callers count and report these.
                }
            }
        }
        self.ledger.append(new_entries)?;
        Ok(resolved)
    }

    fn plan<'s>(
        &self,
        sample: &'s ConflictSample,
        instruction: &Instruction,
        condition: Condition,
        examples: Vec<crate::prompt::FewShotExample>,
    ) -> Result<Planned<'s>, EngineError> {
        let mut spec = PromptSpec::new(instruction, sample, condition.variant)
            .with_role(condition.role)
            .with_examples(examples);
        spec.include_reasoning = self.options.include_reasoning;
        spec.max_chars = self.options.max_prompt_chars;
        let prompt = assemble(&spec)?;
        Ok(Planned {
            sample,
            condition,
            prompt,
        })
    }

    // -----------------------------------------------------------------
    // Stage 1: memory assessment
    // -----------------------------------------------------------------

    /// One no-context prompt per sample; golden-letter verdicts land in
    /// `D+`, wrong and invalid verdicts in `D-`.
    pub fn assess_memory(
        &mut self,
        set: &SampleSet,
        instruction: &Instruction,
    ) -> Result<MemoryProfile, EngineError> {
        if instruction.setting != Setting::ZeroShot {
            return Err(EngineError::Instruction {
                id: instruction.id.clone(),
                reason: "memory assessment needs a zero-shot instruction".into(),
            });
        }
        let mut planned = Vec::with_capacity(set.len());
        for s in set.iter() {
            planned.push(self.plan(
                s,
                instruction,
                Condition::memory(&instruction.id),
                Vec::new(),
            )?);
        }
        let resolved = self.execute(&planned)?;
        let mut profile = MemoryProfile {
            model: self.backend.model_name().to_string(),
            answers: BTreeMap::new(),
            partition: BTreeMap::new(),
            excluded: Vec::new(),
        };
        for (s, verdict) in set.iter().zip(resolved) {
            match verdict {
                Some(v) => {
                    let membership = match v {
                        Verdict::Choice(l) if l == s.golden => Membership::DPlus,
                        _ => Membership::DMinus,
                    };
                    profile.answers.insert(s.id.clone(), v);
                    profile.partition.insert(s.id.clone(), membership);
                }
                None => profile.excluded.push(s.id.clone()),
            }
        }
        Ok(profile)
    }

    // -----------------------------------------------------------------
    // Stage 3: conflict evaluation (shared by selection and role play)
    // -----------------------------------------------------------------

    fn conflict_partitions<'s>(
        &self,
        profile: &MemoryProfile,
        set: &'s SampleSet,
    ) -> (Vec<&'s ConflictSample>, Vec<&'s ConflictSample>) {
        let dplus: Vec<&ConflictSample> = set
            .iter()
            .filter(|s| profile.membership(&s.id) == Some(Membership::DPlus))
            .collect();
        let dminus: Vec<&ConflictSample> = set
            .iter()
            .filter(|s| profile.membership(&s.id) == Some(Membership::DMinus))
            .collect();
        (dplus, dminus)
    }

    /// Zero-shot conflict pass: `D+` under the misleading context, `D-`
    /// under the golden context.
    fn eval_conflict_zero_shot(
        &mut self,
        profile: &MemoryProfile,
        set: &SampleSet,
        instruction: &Instruction,
        phase: Phase,
        role: Role,
        label: &str,
    ) -> Result<(RobustnessScores, ConflictOutcomes), EngineError> {
        let (dplus, dminus) = self.conflict_partitions(profile, set);
        let mut planned = Vec::with_capacity(dplus.len() + dminus.len());
        for s in &dplus {
            let condition = Condition {
                phase,
                variant: ContextVariant::Negative,
                mix: None,
                role,
                instruction_id: instruction.id.clone(),
            };
            planned.push(self.plan(s, instruction, condition, Vec::new())?);
        }
        for s in &dminus {
            let condition = Condition {
                phase,
                variant: ContextVariant::Positive,
                mix: None,
                role,
                instruction_id: instruction.id.clone(),
            };
            planned.push(self.plan(s, instruction, condition, Vec::new())?);
        }
        let resolved = self.execute(&planned)?;
        let (vr_verdicts, rr_verdicts) = resolved.split_at(dplus.len());
        let mut outcomes = ConflictOutcomes::default();
        for (s, v) in dplus.iter().chain(dminus.iter()).zip(resolved.iter()) {
            if let Some(v) = v {
                outcomes.by_sample.insert(s.id.clone(), *v);
            }
        }
        let scores = score_conflict(label, &dplus, vr_verdicts, &dminus, rr_verdicts, None);
        Ok((scores, outcomes))
    }

    /// Main zero-shot robustness entry point.
    pub fn eval_robustness(
        &mut self,
        profile: &MemoryProfile,
        set: &SampleSet,
        instruction: &Instruction,
    ) -> Result<(RobustnessScores, ConflictOutcomes), EngineError> {
        if instruction.setting != Setting::ZeroShot {
            return Err(EngineError::Instruction {
                id: instruction.id.clone(),
                reason: "zero-shot robustness needs a zero-shot instruction".into(),
            });
        }
        self.eval_conflict_zero_shot(profile, set, instruction, Phase::ZeroShot, Role::None, "zs")
    }

    fn fewshot_example_seed(&self, target_id: &str, mix: ExampleMix, scenario: Scenario) -> u64 {
        let mut hasher = Sha256::new();
        hasher.update(self.options.fewshot_seed.to_le_bytes());
        hasher.update(target_id.as_bytes());
        hasher.update(format!("{mix:?}:{scenario:?}").as_bytes());
        let digest = hasher.finalize();
        u64::from_le_bytes(digest[..8].try_into().expect("8 bytes"))
    }

    /// Few-shot robustness: each question is evaluated under all three
    /// example mixes and the per-question results are averaged, so the
    /// denominator is (mixes x partition size).
    pub fn eval_fewshot(
        &mut self,
        profile: &MemoryProfile,
        set: &SampleSet,
        instruction: &Instruction,
        pool: &ExamplePool,
        phase: Phase,
    ) -> Result<RobustnessScores, EngineError> {
        if instruction.setting != Setting::FewShot {
            return Err(EngineError::Instruction {
                id: instruction.id.clone(),
                reason: "few-shot robustness needs a few-shot instruction".into(),
            });
        }
        let (dplus, dminus) = self.conflict_partitions(profile, set);
        let mut per_mix = BTreeMap::new();
        let mut vr_correct = 0usize;
        let mut vr_total = 0usize;
        let mut rr_correct = 0usize;
        let mut rr_total = 0usize;
        let mut excluded = 0usize;
        let mut misleading = 0usize;
        let mut invalid = 0usize;
        let mut corpus_tally: BTreeMap<String, [usize; 4]> = BTreeMap::new();
        for mix in ExampleMix::ALL {
            let mut planned = Vec::new();
            for s in &dplus {
                let config = FewShotConfig {
                    mix,
                    scenario: Scenario::Vulnerable,
                };
                let seed = self.fewshot_example_seed(&s.id, mix, config.scenario);
                let examples = assemble_fewshot(pool, s, config, seed)?;
                let condition = Condition {
                    phase,
                    variant: ContextVariant::Negative,
                    mix: Some(mix),
                    role: Role::None,
                    instruction_id: instruction.id.clone(),
                };
                planned.push(self.plan(s, instruction, condition, examples)?);
            }
            for s in &dminus {
                let config = FewShotConfig {
                    mix,
                    scenario: Scenario::Resilient,
                };
                let seed = self.fewshot_example_seed(&s.id, mix, config.scenario);
                let examples = assemble_fewshot(pool, s, config, seed)?;
                let condition = Condition {
                    phase,
                    variant: ContextVariant::Positive,
                    mix: Some(mix),
                    role: Role::None,
                    instruction_id: instruction.id.clone(),
                };
                planned.push(self.plan(s, instruction, condition, examples)?);
            }
            let resolved = self.execute(&planned)?;
            let (vr_verdicts, rr_verdicts) = resolved.split_at(dplus.len());
            let mut mix_vr_correct = 0usize;
            let mut mix_vr_total = 0usize;
            for (s, v) in dplus.iter().zip(vr_verdicts) {
                match v {
                    Some(Verdict::Choice(l)) => {
                        mix_vr_total += 1;
                        if *l == s.golden {
                            mix_vr_correct += 1;
                            corpus_tally.entry(s.corpus.name().into()).or_default()[0] += 1;
                        } else if *l == s.negative {
                            misleading += 1;
                        }
                        corpus_tally.entry(s.corpus.name().into()).or_default()[1] += 1;
                    }
                    Some(Verdict::Invalid) => {
                        mix_vr_total += 1;
                        invalid += 1;
                        corpus_tally.entry(s.corpus.name().into()).or_default()[1] += 1;
                    }
                    None => excluded += 1,
                }
            }
            let mut mix_rr_correct = 0usize;
            let mut mix_rr_total = 0usize;
            for (s, v) in dminus.iter().zip(rr_verdicts) {
                match v {
                    Some(Verdict::Choice(l)) => {
                        mix_rr_total += 1;
                        if *l == s.golden {
                            mix_rr_correct += 1;
                            corpus_tally.entry(s.corpus.name().into()).or_default()[2] += 1;
                        }
                        corpus_tally.entry(s.corpus.name().into()).or_default()[3] += 1;
                    }
                    Some(Verdict::Invalid) => {
                        mix_rr_total += 1;
                        invalid += 1;
                        corpus_tally.entry(s.corpus.name().into()).or_default()[3] += 1;
                    }
                    None => excluded += 1,
                }
            }
            vr_correct += mix_vr_correct;
            vr_total += mix_vr_total;
            rr_correct += mix_rr_correct;
            rr_total += mix_rr_total;
            let mix_label = format!("{mix:?}");
            per_mix.insert(
                mix_label,
                MixScores {
                    vr: ratio(mix_vr_correct, mix_vr_total),
                    rr: ratio(mix_rr_correct, mix_rr_total),
                },
            );
        }
        let vr = ratio(vr_correct, vr_total);
        let rr = ratio(rr_correct, rr_total);
        let per_corpus = corpus_tally
            .into_iter()
            .map(|(c, [vc, vt, rc, rt])| {
                (
                    c,
                    CorpusScores {
                        vr: ratio(vc, vt),
                        rr: ratio(rc, rt),
                        fr: fr_from(ratio(vc, vt), ratio(rc, rt)),
                        n_dplus: vt,
                        n_dminus: rt,
                    },
                )
            })
            .collect();
        Ok(RobustnessScores {
            condition: "fs".to_string(),
            vr,
            rr,
            fr: fr_from(vr, rr),
            n_dplus: dplus.len(),
            n_dminus: dminus.len(),
            excluded,
            misleading_count: misleading,
            invalid_count: invalid,
            per_corpus,
            per_mix: Some(per_mix),
        })
    }

    // -----------------------------------------------------------------
    // Stage 2: instruction selection
    // -----------------------------------------------------------------

    /// Score every instruction of every (setting, hint) group on the subset
    /// and keep the best: highest FR, then fewest invalid responses, then
    /// lowest instruction id.
    pub fn select_instruction(
        &mut self,
        pool: &InstructionPool,
        subset: &SampleSet,
        profile: &MemoryProfile,
        example_pool: Option<&ExamplePool>,
    ) -> Result<Vec<GroupSelection>, EngineError> {
        let sub_profile = profile.restricted_to(subset);
        if sub_profile.dplus_count() == 0 || sub_profile.dminus_count() == 0 {
            return Err(EngineError::EmptyPartition(
                "instruction selection needs both memory partitions in the subset".into(),
            ));
        }
        let mut selections = Vec::new();
        for setting in [Setting::ZeroShot, Setting::FewShot] {
            for hint in [false, true] {
                let group = pool.group(setting, hint);
                if group.is_empty() {
                    continue;
                }
                if setting == Setting::FewShot && example_pool.is_none() {
                    continue;
                }
                let mut scores = Vec::new();
                for inst in &group {
                    let (fr, invalid_count) = match setting {
                        Setting::ZeroShot => {
                            let (s, _) = self.eval_conflict_zero_shot(
                                &sub_profile,
                                subset,
                                inst,
                                Phase::Select,
                                Role::None,
                                "select",
                            )?;
                            (s.fr, s.invalid_count)
                        }
                        Setting::FewShot => {
                            let s = self.eval_fewshot(
                                &sub_profile,
                                subset,
                                inst,
                                example_pool.expect("checked above"),
                                Phase::Select,
                            )?;
                            (s.fr, s.invalid_count)
                        }
                    };
                    scores.push(SelectionScore {
                        instruction_id: inst.id.clone(),
                        fr,
                        invalid_count,
                    });
                }
                let best = scores
                    .iter()
                    .min_by(|a, b| {
                        let fa = a.fr.unwrap_or(f64::NEG_INFINITY);
                        let fb = b.fr.unwrap_or(f64::NEG_INFINITY);
                        fb.partial_cmp(&fa)
                            .expect("finite scores")
                            .then(a.invalid_count.cmp(&b.invalid_count))
                            .then(a.instruction_id.cmp(&b.instruction_id))
                    })
                    .expect("non-empty group");
                selections.push(GroupSelection {
                    setting,
                    hint,
                    best_id: best.instruction_id.clone(),
                    scores,
                });
            }
        }
        Ok(selections)
    }

    // -----------------------------------------------------------------
    // Stage 5: role-play intervention
    // -----------------------------------------------------------------

    /// Re-run the zero-shot conflict evaluation under both role prefixes and
    /// summarize adaptivity and the FR upper bound.
    pub fn run_role_intervention(
        &mut self,
        profile: &MemoryProfile,
        set: &SampleSet,
        instruction: &Instruction,
        baseline: ConditionMetrics,
    ) -> Result<InterventionSummary, EngineError> {
        let mut role_metrics = |role: Role, label: &str| -> Result<ConditionMetrics, EngineError> {
            let (scores, outcomes) = self.eval_conflict_zero_shot(
                profile,
                set,
                instruction,
                Phase::RolePlay,
                role,
                label,
            )?;
            let effective = effective_profile(profile, &outcomes);
            let dmss = compute_dmss(&effective, &outcomes, set)?;
            Ok(ConditionMetrics { scores, dmss })
        };
        let intuitive = role_metrics(Role::Intuitive, "role:intuitive")?;
        let dependent = role_metrics(Role::Dependent, "role:dependent")?;
        let adaptivity = intuitive.dmss - dependent.dmss;
        let conditions = [&baseline, &intuitive, &dependent];
        let max_vr = conditions
            .iter()
            .map(|c| c.scores.vr)
            .try_fold(f64::NEG_INFINITY, |acc, v| v.map(|v| acc.max(v)));
        let max_rr = conditions
            .iter()
            .map(|c| c.scores.rr)
            .try_fold(f64::NEG_INFINITY, |acc, v| v.map(|v| acc.max(v)));
        let fr_upper = match (max_vr, max_rr) {
            (Some(v), Some(r)) => Some((v + r) / 2.0),
            _ => None,
        };
        Ok(InterventionSummary {
            baseline,
            intuitive,
            dependent,
            adaptivity,
            fr_upper,
        })
    }
}

/// Drop samples without outcomes (transport failures) from a profile so the
/// style score runs on full coverage.
pub fn effective_profile(profile: &MemoryProfile, outcomes: &ConflictOutcomes) -> MemoryProfile {
    let mut p = profile.clone();
    p.partition.retain(|id, _| outcomes.by_sample.contains_key(id));
    p.answers.retain(|id, _| outcomes.by_sample.contains_key(id));
    p
}

fn ratio(num: usize, den: usize) -> Option<f64> {
    if den == 0 {
        None
    } else {
        Some(num as f64 / den as f64)
    }
}

fn score_conflict(
    label: &str,
    dplus: &[&ConflictSample],
    vr_verdicts: &[Option<Verdict>],
    dminus: &[&ConflictSample],
    rr_verdicts: &[Option<Verdict>],
    per_mix: Option<BTreeMap<String, MixScores>>,
) -> RobustnessScores {
    let mut excluded = 0usize;
    let mut invalid = 0usize;
    let mut misleading = 0usize;
    let mut vr_correct = 0usize;
    let mut vr_total = 0usize;
    let mut rr_correct = 0usize;
    let mut rr_total = 0usize;
    // Per corpus: [vr_correct, vr_total, rr_correct, rr_total].
    let mut corpus_tally: BTreeMap<String, [usize; 4]> = BTreeMap::new();
    for (s, v) in dplus.iter().zip(vr_verdicts) {
        let tally = corpus_tally.entry(s.corpus.name().into()).or_default();
        match v {
            Some(verdict) => {
                vr_total += 1;
                tally[1] += 1;
                match verdict {
                    Verdict::Choice(l) if *l == s.golden => {
                        vr_correct += 1;
                        tally[0] += 1;
                    }
                    Verdict::Choice(l) if *l == s.negative => misleading += 1,
                    Verdict::Choice(_) => {}
                    Verdict::Invalid => invalid += 1,
                }
            }
            None => excluded += 1,
        }
    }
    for (s, v) in dminus.iter().zip(rr_verdicts) {
        let tally = corpus_tally.entry(s.corpus.name().into()).or_default();
        match v {
            Some(verdict) => {
                rr_total += 1;
                tally[3] += 1;
                match verdict {
                    Verdict::Choice(l) if *l == s.golden => {
                        rr_correct += 1;
                        tally[2] += 1;
                    }
                    Verdict::Choice(_) => {}
                    Verdict::Invalid => invalid += 1,
                }
            }
            None => excluded += 1,
        }
    }
    let vr = ratio(vr_correct, vr_total);
    let rr = ratio(rr_correct, rr_total);
    let per_corpus = corpus_tally
        .into_iter()
        .map(|(c, [vc, vt, rc, rt])| {
            (
                c,
                CorpusScores {
                    vr: ratio(vc, vt),
                    rr: ratio(rc, rt),
                    fr: fr_from(ratio(vc, vt), ratio(rc, rt)),
                    n_dplus: vt,
                    n_dminus: rt,
                },
            )
        })
        .collect();
    RobustnessScores {
        condition: label.to_string(),
        vr,
        rr,
        fr: fr_from(vr, rr),
        n_dplus: dplus.len(),
        n_dminus: dminus.len(),
        excluded,
        misleading_count: misleading,
        invalid_count: invalid,
        per_corpus,
        per_mix,
    }
}

/// Seeded subset stratified by (corpus, membership); both memory partitions
/// are always represented when the full profile has them.
pub fn stratified_subset(
    set: &SampleSet,
    profile: &MemoryProfile,
    size: usize,
    seed: u64,
) -> Result<SampleSet, EngineError> {
    let assessed: Vec<&ConflictSample> = set
        .iter()
        .filter(|s| profile.membership(&s.id).is_some())
        .collect();
    let target = size.min(assessed.len());
    if target == 0 {
        return Err(EngineError::EmptyPartition("no assessed samples".into()));
    }
    let mut groups: BTreeMap<(String, bool), Vec<&ConflictSample>> = BTreeMap::new();
    for s in &assessed {
        let key = (
            s.corpus.name().to_string(),
            profile.membership(&s.id) == Some(Membership::DPlus),
        );
        groups.entry(key).or_default().push(s);
    }
    // Largest-remainder proportional allocation.
    let mut allocations: Vec<((String, bool), usize, f64)> = groups
        .iter()
        .map(|(key, members)| {
            let exact = target as f64 * members.len() as f64 / assessed.len() as f64;
            (key.clone(), exact.floor() as usize, exact.fract())
        })
        .collect();
    let mut used: usize = allocations.iter().map(|(_, n, _)| n).sum();
    allocations.sort_by(|a, b| b.2.partial_cmp(&a.2).expect("finite fractions"));
    let mut i = 0;
    let n_groups = allocations.len();
    while used < target {
        let idx = i % n_groups;
        let cap = groups[&allocations[idx].0].len();
        if allocations[idx].1 < cap {
            allocations[idx].1 += 1;
            used += 1;
        }
        i += 1;
    }
    // Guarantee each present membership side at least one slot.
    for side in [true, false] {
        let side_has = groups.keys().any(|(_, s)| *s == side);
        let side_allocated = allocations
            .iter()
            .any(|((_, s), n, _)| *s == side && *n > 0);
        if side_has && !side_allocated {
            if let Some(donor) = allocations
                .iter()
                .position(|((_, s), n, _)| *s != side && *n > 1)
            {
                allocations[donor].1 -= 1;
                if let Some(taker) = allocations.iter().position(|((_, s), _, _)| *s == side) {
                    allocations[taker].1 += 1;
                }
            }
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ subset_marker());
    let mut chosen: std::collections::HashSet<String> = std::collections::HashSet::new();
    for (key, n, _) in &allocations {
        let members = &groups[key];
        let picked = rand::seq::index::sample(&mut rng, members.len(), (*n).min(members.len()));
        for idx in picked.iter() {
            chosen.insert(members[idx].id.clone());
        }
    }
    let samples: Vec<ConflictSample> = set
        .iter()
        .filter(|s| chosen.contains(&s.id))
        .cloned()
        .collect();
    SampleSet::new(
        format!("{}-subset", set.name),
        format!("stratified subset of {} (size {target}, seed {seed})", set.name),
        samples,
    )
    .map_err(|e| EngineError::Ledger(e.to_string()))
}

const fn subset_marker() -> u64 {
    0x73756273
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::builder::{InstructionPool, Origin};
    use crate::gateway::script::FixedScriptBackend;
    use crate::gateway::synthetic::{memory_table, synthetic_sample_set, StyleParams, SyntheticBackend};
    use crate::parser::Verdict;
    use crate::sample::OptionLetter;

    fn zs_instruction(id: &str) -> Instruction {
        Instruction {
            id: id.into(),
            text: "Answer the question with one option. Return \"None\" if unsure.".into(),
            hint: false,
            setting: Setting::ZeroShot,
            origin: Origin::HumanDraft,
        }
    }

    fn synthetic_eval(
        n: usize,
        probs: (f64, f64, f64),
        memory_fraction: f64,
        seed: u64,
    ) -> (SampleSet, SyntheticBackend) {
        let set = synthetic_sample_set(n, seed);
        let table = memory_table(&set, memory_fraction, seed);
        let params = StyleParams::new(probs.0, probs.1, probs.2, seed).with_memory_table(table);
        let backend = SyntheticBackend::new("agent", &set, params).unwrap();
        (set, backend)
    }

    #[test]
    fn memory_assessment_matches_the_table() {
        let (set, backend) = synthetic_eval(10, (0.0, 1.0, 0.0), 0.7, 3);
        let mut eval = Evaluator::in_memory(&backend, EngineOptions::default());
        let profile = eval.assess_memory(&set, &zs_instruction("m")).unwrap();
        assert_eq!(profile.dplus_count(), 7);
        assert_eq!(profile.dminus_count(), 3);
        assert_eq!(profile.accuracy(), Some(0.7));
        assert!(profile.excluded.is_empty());
    }

    #[test]
    fn always_golden_model_empties_dminus() {
        let (set, backend) = synthetic_eval(12, (0.0, 1.0, 0.0), 1.0, 5);
        let mut eval = Evaluator::in_memory(&backend, EngineOptions::default());
        let profile = eval.assess_memory(&set, &zs_instruction("m")).unwrap();
        assert_eq!(profile.dminus_count(), 0);
        assert_eq!(profile.accuracy(), Some(1.0));
        let acc = profile.per_corpus_accuracy(&set);
        assert!(acc.values().all(|a| *a == 1.0));
    }

    #[test]
    fn dependent_agent_yields_vr0_rr1_dmss_minus1() {
        let (set, backend) = synthetic_eval(40, (1.0, 0.0, 0.0), 0.5, 7);
        let mut eval = Evaluator::in_memory(&backend, EngineOptions::default());
        let inst = zs_instruction("zs");
        let profile = eval.assess_memory(&set, &zs_instruction("m")).unwrap();
        let (scores, outcomes) = eval.eval_robustness(&profile, &set, &inst).unwrap();
        assert_eq!(scores.vr, Some(0.0));
        assert_eq!(scores.rr, Some(1.0));
        assert_eq!(scores.fr, Some(0.5));
        let dmss = compute_dmss(&profile, &outcomes, &set).unwrap();
        assert_eq!(dmss, -1.0);
        assert_eq!(
            classify_style(dmss, scores.fr, &StyleThresholds::default()),
            Style::Dependent
        );
    }

    #[test]
    fn intuitive_agent_yields_vr1_rr0_dmss_plus1() {
        let (set, backend) = synthetic_eval(40, (0.0, 1.0, 0.0), 0.5, 7);
        let mut eval = Evaluator::in_memory(&backend, EngineOptions::default());
        let inst = zs_instruction("zs");
        let profile = eval.assess_memory(&set, &zs_instruction("m")).unwrap();
        let (scores, outcomes) = eval.eval_robustness(&profile, &set, &inst).unwrap();
        assert_eq!(scores.vr, Some(1.0));
        assert_eq!(scores.rr, Some(0.0));
        assert_eq!(scores.fr, Some(0.5));
        let dmss = compute_dmss(&profile, &outcomes, &set).unwrap();
        assert_eq!(dmss, 1.0);
        assert_eq!(
            classify_style(dmss, scores.fr, &StyleThresholds::default()),
            Style::Intuitive
        );
    }

    fn other_letter(s: &ConflictSample, avoid: &[OptionLetter]) -> OptionLetter {
        s.letters()
            .into_iter()
            .find(|l| !avoid.contains(l))
            .expect("enough options")
    }

    #[test]
    fn dmss_matches_hand_enumeration() {
        // |D+| = 4 answering (2 golden, 1 negative, 1 other); |D-| = 6
        // answering (3 memory, 2 golden, 1 other) => (2+3)/10 - (1+2)/10.
        let set = synthetic_sample_set(10, 1);
        let ids: Vec<String> = set.iter().map(|s| s.id.clone()).collect();
        let mut profile = MemoryProfile {
            model: "hand".into(),
            answers: BTreeMap::new(),
            partition: BTreeMap::new(),
            excluded: Vec::new(),
        };
        let mut outcomes = ConflictOutcomes::default();
        for (i, id) in ids.iter().enumerate() {
            let s = set.get(id).unwrap();
            if i < 4 {
                profile.partition.insert(id.clone(), Membership::DPlus);
                profile.answers.insert(id.clone(), Verdict::Choice(s.golden));
                let verdict = match i {
                    0 | 1 => Verdict::Choice(s.golden),
                    2 => Verdict::Choice(s.negative),
                    _ => Verdict::Choice(other_letter(s, &[s.golden, s.negative])),
                };
                outcomes.by_sample.insert(id.clone(), verdict);
            } else {
                let memory = other_letter(s, &[s.golden]);
                profile.partition.insert(id.clone(), Membership::DMinus);
                profile.answers.insert(id.clone(), Verdict::Choice(memory));
                let verdict = match i {
                    4 | 5 | 6 => Verdict::Choice(memory),
                    7 | 8 => Verdict::Choice(s.golden),
                    _ => Verdict::Choice(other_letter(s, &[s.golden, memory])),
                };
                outcomes.by_sample.insert(id.clone(), verdict);
            }
        }
        let dmss = compute_dmss(&profile, &outcomes, &set).unwrap();
        assert!((dmss - 0.2).abs() < 1e-12, "dmss {dmss}");
    }

    #[test]
    fn dmss_coverage_gap_is_an_error() {
        let (set, backend) = synthetic_eval(10, (1.0, 0.0, 0.0), 0.5, 2);
        let mut eval = Evaluator::in_memory(&backend, EngineOptions::default());
        let profile = eval.assess_memory(&set, &zs_instruction("m")).unwrap();
        let (_, mut outcomes) = eval
            .eval_robustness(&profile, &set, &zs_instruction("zs"))
            .unwrap();
        let some_id = outcomes.by_sample.keys().next().unwrap().clone();
        outcomes.by_sample.remove(&some_id);
        let err = compute_dmss(&profile, &outcomes, &set).unwrap_err();
        assert!(matches!(err, EngineError::MissingOutcome(_)));
    }

    #[test]
    fn invalid_memory_answer_never_matches_invalid_outcome() {
        // One D- sample whose memory answer is Invalid and whose conflict
        // verdict is Invalid: no credit in either direction.
        let set = synthetic_sample_set(1, 4);
        let id = set.samples()[0].id.clone();
        let mut profile = MemoryProfile {
            model: "hand".into(),
            answers: BTreeMap::new(),
            partition: BTreeMap::new(),
            excluded: Vec::new(),
        };
        profile.partition.insert(id.clone(), Membership::DMinus);
        profile.answers.insert(id.clone(), Verdict::Invalid);
        let mut outcomes = ConflictOutcomes::default();
        outcomes.by_sample.insert(id, Verdict::Invalid);
        assert_eq!(compute_dmss(&profile, &outcomes, &set).unwrap(), 0.0);
    }

    #[test]
    fn style_classification_matches_published_rows() {
        let t = StyleThresholds::default();
        assert_eq!(classify_style(-0.43, Some(0.56), &t), Style::Dependent);
        assert_eq!(classify_style(-0.10, Some(0.69), &t), Style::Rational);
        assert_eq!(classify_style(0.39, Some(0.20), &t), Style::Intuitive);
        assert_eq!(classify_style(0.0, Some(0.0), &t), Style::Irrational);
        assert_eq!(classify_style(0.0, None, &t), Style::Irrational);
        assert_eq!(classify_style(-0.20, Some(0.9), &t), Style::Dependent);
        assert_eq!(classify_style(0.20, Some(0.9), &t), Style::Intuitive);
    }

    #[test]
    fn deleting_dminus_leaves_vr_unchanged() {
        let (set, backend) = synthetic_eval(60, (0.5, 0.3, 0.1), 0.5, 11);
        let mut eval = Evaluator::in_memory(&backend, EngineOptions::default());
        let profile = eval.assess_memory(&set, &zs_instruction("m")).unwrap();
        let inst = zs_instruction("zs");
        let (full, _) = eval.eval_robustness(&profile, &set, &inst).unwrap();
        let mut dplus_only = profile.clone();
        dplus_only.partition.retain(|_, m| *m == Membership::DPlus);
        let (partial, _) = eval.eval_robustness(&dplus_only, &set, &inst).unwrap();
        assert_eq!(full.vr, partial.vr);
        assert_eq!(partial.rr, None);
        assert_eq!(partial.fr, None);
        let mut dminus_only = profile.clone();
        dminus_only.partition.retain(|_, m| *m == Membership::DMinus);
        let (partial, _) = eval.eval_robustness(&dminus_only, &set, &inst).unwrap();
        assert_eq!(full.rr, partial.rr);
        assert_eq!(partial.vr, None);
    }

    #[test]
    fn selection_breaks_fr_ties_by_fewer_invalids() {
        let set = synthetic_sample_set(8, 21);
        let samples: Vec<&ConflictSample> = set.iter().collect();
        let mut profile = MemoryProfile {
            model: "scripted".into(),
            answers: BTreeMap::new(),
            partition: BTreeMap::new(),
            excluded: Vec::new(),
        };
        for (i, s) in samples.iter().enumerate() {
            let membership = if i < 4 { Membership::DPlus } else { Membership::DMinus };
            let answer = if i < 4 {
                Verdict::Choice(s.golden)
            } else {
                Verdict::Choice(other_letter(s, &[s.golden]))
            };
            profile.partition.insert(s.id.clone(), membership);
            profile.answers.insert(s.id.clone(), answer);
        }
        let golden = |s: &ConflictSample| format!("The answer is {}.", s.golden);
        let wrong = |s: &ConflictSample| {
            format!("The answer is {}.", other_letter(s, &[s.golden, s.negative]))
        };
        // Both instructions score VR=1/4, RR=2/4 (FR tie); invalids 3 vs 5.
        let mut script = Vec::new();
        script.extend([golden(samples[0]), "None".into(), "None".into(), "None".into()]);
        script.extend([
            golden(samples[4]),
            golden(samples[5]),
            wrong(samples[6]),
            wrong(samples[7]),
        ]);
        script.extend([golden(samples[0]), "None".into(), "None".into(), "None".into()]);
        script.extend([
            golden(samples[4]),
            golden(samples[5]),
            "None".into(),
            "None".into(),
        ]);
        let backend = FixedScriptBackend::new("scripted", script);
        let mut eval = Evaluator::in_memory(&backend, EngineOptions::default());
        let pool = InstructionPool::new(vec![zs_instruction("t-01"), zs_instruction("t-02")])
            .unwrap();
        let selections = eval
            .select_instruction(&pool, &set, &profile, None)
            .unwrap();
        assert_eq!(selections.len(), 1);
        let group = &selections[0];
        assert_eq!(group.scores.len(), 2);
        assert_eq!(group.scores[0].fr, group.scores[1].fr);
        assert_eq!(group.scores[0].invalid_count, 3);
        assert_eq!(group.scores[1].invalid_count, 5);
        assert_eq!(group.best_id, "t-01");
    }

    #[test]
    fn selection_needs_both_partitions() {
        let (set, backend) = synthetic_eval(10, (0.0, 1.0, 0.0), 1.0, 2);
        let mut eval = Evaluator::in_memory(&backend, EngineOptions::default());
        let profile = eval.assess_memory(&set, &zs_instruction("m")).unwrap();
        let pool = InstructionPool::new(vec![zs_instruction("only")]).unwrap();
        let err = eval
            .select_instruction(&pool, &set, &profile, None)
            .unwrap_err();
        assert!(matches!(err, EngineError::EmptyPartition(_)));
    }

    #[test]
    fn zero_delta_intervention_on_degenerate_agent_is_a_noop() {
        let (set, backend) = synthetic_eval(30, (1.0, 0.0, 0.0), 0.5, 13);
        let mut eval = Evaluator::in_memory(&backend, EngineOptions::default());
        let inst = zs_instruction("zs");
        let profile = eval.assess_memory(&set, &zs_instruction("m")).unwrap();
        let (scores, outcomes) = eval.eval_robustness(&profile, &set, &inst).unwrap();
        let dmss = compute_dmss(&profile, &outcomes, &set).unwrap();
        let baseline = ConditionMetrics {
            scores: scores.clone(),
            dmss,
        };
        let summary = eval
            .run_role_intervention(&profile, &set, &inst, baseline)
            .unwrap();
        assert_eq!(summary.adaptivity, 0.0);
        assert_eq!(summary.fr_upper, scores.fr);
        assert_eq!(summary.intuitive.dmss, summary.dependent.dmss);
    }

    #[test]
    fn fr_upper_dominates_every_condition() {
        let (set, backend) = synthetic_eval(50, (0.5, 0.3, 0.1), 0.5, 17);
        let mut eval = Evaluator::in_memory(&backend, EngineOptions::default());
        let inst = zs_instruction("zs");
        let profile = eval.assess_memory(&set, &zs_instruction("m")).unwrap();
        let (scores, outcomes) = eval.eval_robustness(&profile, &set, &inst).unwrap();
        let dmss = compute_dmss(&profile, &outcomes, &set).unwrap();
        let baseline = ConditionMetrics {
            scores: scores.clone(),
            dmss,
        };
        let summary = eval
            .run_role_intervention(&profile, &set, &inst, baseline)
            .unwrap();
        let upper = summary.fr_upper.unwrap();
        for c in [&summary.baseline, &summary.intuitive, &summary.dependent] {
            assert!(upper >= c.scores.fr.unwrap() - 1e-12);
        }
        assert!(summary.adaptivity.abs() <= 2.0);
    }

    #[test]
    fn fewshot_scores_have_three_mixes_and_exact_degenerate_values() {
        let (set, backend) = synthetic_eval(12, (1.0, 0.0, 0.0), 0.5, 19);
        let mut eval = Evaluator::in_memory(&backend, EngineOptions::default());
        let profile = eval.assess_memory(&set, &zs_instruction("m")).unwrap();
        let mut inst = zs_instruction("fs");
        inst.setting = Setting::FewShot;
        inst.text = format!("{} Examples:\n{{examples}}", inst.text);
        let pool = ExamplePool::bundled();
        let scores = eval
            .eval_fewshot(&profile, &set, &inst, &pool, Phase::FewShot)
            .unwrap();
        assert_eq!(scores.per_mix.as_ref().unwrap().len(), 3);
        assert_eq!(scores.vr, Some(0.0));
        assert_eq!(scores.rr, Some(1.0));
        assert_eq!(scores.fr, Some(0.5));
    }

    #[test]
    fn resume_makes_no_backend_calls() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("ledger.jsonl");
        let (set, backend) = synthetic_eval(15, (0.6, 0.3, 0.1), 0.5, 23);
        let header = LedgerHeader {
            model: "agent".into(),
            config_hash: "h".into(),
            seed: 23,
            parser_version: crate::parser::PARSER_VERSION.into(),
        };
        let inst = zs_instruction("zs");
        let first = {
            let ledger = Ledger::open(&path, header.clone()).unwrap();
            let mut eval = Evaluator::new(&backend, EngineOptions::default(), ledger);
            let profile = eval.assess_memory(&set, &zs_instruction("m")).unwrap();
            let (scores, _) = eval.eval_robustness(&profile, &set, &inst).unwrap();
            assert!(eval.backend_calls > 0);
            (profile, scores)
        };
        let ledger = Ledger::open(&path, header).unwrap();
        let mut eval = Evaluator::new(&backend, EngineOptions::default(), ledger);
        let profile = eval.assess_memory(&set, &zs_instruction("m")).unwrap();
        let (scores, _) = eval.eval_robustness(&profile, &set, &inst).unwrap();
        assert_eq!(eval.backend_calls, 0, "resume must not call the backend");
        assert!(eval.ledger_hits > 0);
        assert_eq!(profile, first.0);
        assert_eq!(scores, first.1);
    }

    #[test]
    fn stratified_subset_is_seeded_and_covers_both_sides() {
        let (set, backend) = synthetic_eval(40, (0.5, 0.4, 0.0), 0.25, 29);
        let mut eval = Evaluator::in_memory(&backend, EngineOptions::default());
        let profile = eval.assess_memory(&set, &zs_instruction("m")).unwrap();
        let a = stratified_subset(&set, &profile, 12, 5).unwrap();
        let b = stratified_subset(&set, &profile, 12, 5).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 12);
        let restricted = profile.restricted_to(&a);
        assert!(restricted.dplus_count() > 0);
        assert!(restricted.dminus_count() > 0);
        let c = stratified_subset(&set, &profile, 12, 6).unwrap();
        assert_ne!(a, c);
    }
}
