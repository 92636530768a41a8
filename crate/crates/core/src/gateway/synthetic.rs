//! Synthetic styled-agent oracle.
//!
//! The agent answers each conflict question by following the presented
//! context with probability `p_follow_context`, its own memory table with
//! probability `p_follow_memory`, refusing ("None") with `p_invalid`, and
//! picking a uniformly random option with the residual mass. Role conditions
//! shift the targeted probability by an additive delta, clamped back onto the
//! simplex. Memory-assessment requests (no context) always return the memory
//! letter.
//!
//! Draws are seeded per (seed, sample id, condition tag), so results are
//! bit-identical across runs, request orderings, and parallelism levels.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{CompletionBackend, CompletionRequest, Condition, GatewayError, RawResponse};
use crate::prompt::{ContextVariant, Role};
use crate::sample::{ConflictSample, Corpus, OptionLetter, SampleSet, TaskKind};

/// Behaviour of the synthetic agent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StyleParams {
    pub p_follow_context: f64,
    pub p_follow_memory: f64,
    pub p_invalid: f64,
    /// Additive probability shift applied by role conditions.
    pub intervention_delta: f64,
    pub seed: u64,
    /// Memorized letter per sample id.
    pub memory_table: BTreeMap<String, OptionLetter>,
    /// When true, samples missing from the table fall back to a letter
    /// derived from the sample id hash instead of failing.
    pub hashed_fallback: bool,
}

impl StyleParams {
    pub fn new(p_follow_context: f64, p_follow_memory: f64, p_invalid: f64, seed: u64) -> Self {
        StyleParams {
            p_follow_context,
            p_follow_memory,
            p_invalid,
            intervention_delta: 0.0,
            seed,
            memory_table: BTreeMap::new(),
            hashed_fallback: false,
        }
    }

    pub fn with_memory_table(mut self, table: BTreeMap<String, OptionLetter>) -> Self {
        self.memory_table = table;
        self
    }

    pub fn with_intervention_delta(mut self, delta: f64) -> Self {
        self.intervention_delta = delta;
        self
    }

    pub fn validate(&self) -> Result<(), GatewayError> {
        let probs = [self.p_follow_context, self.p_follow_memory, self.p_invalid];
        if probs.iter().any(|p| *p < 0.0 || !p.is_finite()) {
            return Err(GatewayError::InvalidConfig(
                "style probabilities must be >= 0".into(),
            ));
        }
        if probs.iter().sum::<f64>() > 1.0 + 1e-12 {
            return Err(GatewayError::InvalidConfig(
                "style probabilities must sum to <= 1".into(),
            ));
        }
        if self.intervention_delta < 0.0 {
            return Err(GatewayError::InvalidConfig(
                "intervention delta must be >= 0".into(),
            ));
        }
        Ok(())
    }

    /// (p_follow_context, p_follow_memory, p_invalid) under a role, shifted
    /// by the delta and rescaled so the total stays on the simplex.
    pub fn effective_probs(&self, role: Role) -> (f64, f64, f64) {
        let (ctx, mem, inv) = (self.p_follow_context, self.p_follow_memory, self.p_invalid);
        let shift = |target: f64, a: f64, b: f64| -> (f64, f64, f64) {
            let boosted = (target + self.intervention_delta).min(1.0);
            let rest = 1.0 - target;
            let scale = if rest <= f64::EPSILON {
                0.0
            } else {
                (1.0 - boosted) / rest
            };
            (boosted, a * scale, b * scale)
        };
        match role {
            Role::None => (ctx, mem, inv),
            Role::Intuitive => {
                let (m, c, i) = shift(mem, ctx, inv);
                (c, m, i)
            }
            Role::Dependent => {
                let (c, m, i) = shift(ctx, mem, inv);
                (c, m, i)
            }
        }
    }
}

fn rng_for(seed: u64, sample_id: &str, condition_tag: &str) -> ChaCha8Rng {
    let mut hasher = Sha256::new();
    hasher.update(seed.to_le_bytes());
    hasher.update(sample_id.as_bytes());
    hasher.update(b":");
    hasher.update(condition_tag.as_bytes());
    let digest = hasher.finalize();
    let mut key = [0u8; 32];
    key.copy_from_slice(&digest);
    ChaCha8Rng::from_seed(key)
}

fn hashed_letter(sample: &ConflictSample) -> OptionLetter {
    let digest = Sha256::digest(sample.id.as_bytes());
    let idx = u64::from_le_bytes(digest[..8].try_into().expect("8 bytes")) as usize;
    let letters = sample.letters();
    letters[idx % letters.len()]
}

fn render_letter(sample: &ConflictSample, letter: OptionLetter) -> String {
    format!("The answer is {}: {}.", letter, sample.options[&letter])
}

/// Answer one sample under one condition according to the agent law.
pub fn synthetic_answer(
    sample: &ConflictSample,
    condition: &Condition,
    params: &StyleParams,
) -> Result<RawResponse, GatewayError> {
    let memory_letter = match params.memory_table.get(&sample.id) {
        Some(l) => *l,
        None if params.hashed_fallback => hashed_letter(sample),
        None => {
            return Err(GatewayError::MissingMemory {
                sample_id: sample.id.clone(),
            })
        }
    };
    let tag = condition.tag();
    let text = if condition.variant == ContextVariant::None {
        // Memory assessment: deterministic recall of the memorized letter.
        render_letter(sample, memory_letter)
    } else {
        let context_letter = match condition.variant {
            ContextVariant::Positive => sample.golden,
            ContextVariant::Negative => sample.negative,
            ContextVariant::None => unreachable!(),
        };
        let (p_ctx, p_mem, p_inv) = params.effective_probs(condition.role);
        let mut rng = rng_for(params.seed, &sample.id, &tag);
        let u: f64 = rng.gen();
        if u < p_ctx {
            render_letter(sample, context_letter)
        } else if u < p_ctx + p_mem {
            render_letter(sample, memory_letter)
        } else if u < p_ctx + p_mem + p_inv {
            "None".to_string()
        } else {
            let letters = sample.letters();
            let letter = *letters.choose(&mut rng).expect("non-empty options");
            render_letter(sample, letter)
        }
    };
    Ok(RawResponse {
        sample_id: sample.id.clone(),
        condition: tag,
        text,
        latency_ms: 0,
        attempts: 1,
        cache_hit: false,
    })
}

/// Backend wrapper: resolves sample ids against a sample set and delegates to
/// [`synthetic_answer`].
pub struct SyntheticBackend {
    model: String,
    samples: BTreeMap<String, ConflictSample>,
    params: StyleParams,
}

impl SyntheticBackend {
    pub fn new(
        model: impl Into<String>,
        set: &SampleSet,
        params: StyleParams,
    ) -> Result<Self, GatewayError> {
        params.validate()?;
        Ok(SyntheticBackend {
            model: model.into(),
            samples: set
                .iter()
                .map(|s| (s.id.clone(), s.clone()))
                .collect(),
            params,
        })
    }

    pub fn params(&self) -> &StyleParams {
        &self.params
    }
}

impl CompletionBackend for SyntheticBackend {
    fn complete(&self, request: &CompletionRequest) -> Result<RawResponse, GatewayError> {
        let sample = self
            .samples
            .get(&request.sample_id)
            .ok_or_else(|| GatewayError::UnknownSample {
                sample_id: request.sample_id.clone(),
            })?;
        synthetic_answer(sample, &request.condition, &self.params)
    }

    fn model_name(&self) -> &str {
        &self.model
    }
}

// ---------------------------------------------------------------------------
// Synthetic fixtures
// ---------------------------------------------------------------------------

/// Deterministic synthetic conflict set: `n` valid samples with four options
/// each, corpora cycling over the four source corpora.
pub fn synthetic_sample_set(n: usize, seed: u64) -> SampleSet {
    let corpora = [Corpus::MuSiQue, Corpus::SquadV2, Corpus::Ecqa, Corpus::ECare];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut samples = Vec::with_capacity(n);
    for i in 0..n {
        let corpus = corpora[i % corpora.len()];
        let task_kind = match corpus {
            Corpus::MuSiQue | Corpus::SquadV2 => TaskKind::Mrc,
            _ => TaskKind::Cr,
        };
        let mut options = BTreeMap::new();
        for k in 0..4 {
            options.insert(
                OptionLetter::from_index(k).expect("k < 5"),
                format!("entry-{i}-{k}"),
            );
        }
        let golden_idx = rng.gen_range(0..4);
        let mut negative_idx = rng.gen_range(0..4);
        while negative_idx == golden_idx {
            negative_idx = rng.gen_range(0..4);
        }
        let golden = OptionLetter::from_index(golden_idx).expect("idx < 5");
        let negative = OptionLetter::from_index(negative_idx).expect("idx < 5");
        samples.push(ConflictSample {
            id: format!("syn-{i:05}"),
            corpus,
            task_kind,
            question: format!("Which entry is designated for slot {i}?"),
            positive_context: format!(
                "Record {i}: the designated entry for slot {i} is {}.",
                options[&golden]
            ),
            negative_context: format!(
                "Record {i}: the designated entry for slot {i} is {}.",
                options[&negative]
            ),
            options,
            golden,
            negative,
            answerable: true,
        });
    }
    SampleSet::new(format!("synthetic-{n}"), format!("synthetic seed={seed}"), samples)
        .expect("generated samples are valid")
}

/// Build a memory table where an exact `round(fraction * n)` of samples
/// memorize their golden letter and the rest memorize a wrong one.
pub fn memory_table(
    set: &SampleSet,
    correct_fraction: f64,
    seed: u64,
) -> BTreeMap<String, OptionLetter> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x6d656d);
    let mut ids: Vec<&ConflictSample> = set.iter().collect();
    ids.shuffle(&mut rng);
    let n_correct = (correct_fraction * set.len() as f64).round() as usize;
    let mut table = BTreeMap::new();
    for (i, sample) in ids.into_iter().enumerate() {
        let letter = if i < n_correct {
            sample.golden
        } else {
            let wrong: Vec<OptionLetter> = sample
                .letters()
                .into_iter()
                .filter(|l| *l != sample.golden)
                .collect();
            wrong[rng.gen_range(0..wrong.len())]
        };
        table.insert(sample.id.clone(), letter);
    }
    table
}
