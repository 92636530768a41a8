//! Stage orchestration over a run configuration.
//!
//! A run walks the stages `build -> assess -> select -> robustness ->
//! fewshot -> dmss -> roleplay -> report` in dependency order, executing the
//! requested subset. Every stage persists its artifact under the output
//! directory and later stages load what earlier invocations produced, so a
//! run is resumable: model calls already present in a model's run ledger are
//! never re-sent.
//!
//! The config hash stamped into ledgers and artifacts covers only fields
//! that influence results (dataset bytes, pools, seeds, thresholds, model
//! semantics); execution knobs like parallelism, retry, and rate caps do not
//! change results and are excluded, which keeps runs byte-identical across
//! parallelism levels.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::builder::{self, BuildOptions, BuilderError, Instruction, InstructionPool, Setting};
use crate::engine::{
    classify_style, compute_dmss, effective_profile, ConditionMetrics, ConflictOutcomes,
    EngineError, EngineOptions, Evaluator, GroupSelection, InterventionSummary, Ledger,
    LedgerHeader, MemoryProfile, RobustnessScores, StyleThresholds, StyleVerdict,
};
use crate::gateway::replay::{ReplayCache, ReplayRecord};
use crate::gateway::remote::RemoteBackend;
use crate::gateway::script::FixedScriptBackend;
use crate::gateway::synthetic::{memory_table, StyleParams, SyntheticBackend};
use crate::gateway::{BackendKind, CompletionBackend, GatewayError, ModelConfig, Phase, RetryPolicy};
use crate::parser::PARSER_VERSION;
use crate::prompt::{ExamplePool, PromptError};
use crate::report::{
    build_leaderboard, emit_report, LeaderboardInput, ReportError, ReportFormat, ReportMeta,
};
use crate::sample::{load_dataset, DatasetError, DatasetFormat, DatasetManifest, SampleSet};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("config: {0}")]
    Config(String),
    #[error("stage dependency: {0}")]
    StageDependency(String),
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error(transparent)]
    Builder(#[from] BuilderError),
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Gateway(#[from] GatewayError),
    #[error(transparent)]
    Prompt(#[from] PromptError),
    #[error(transparent)]
    Report(#[from] ReportError),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("serialization: {0}")]
    Json(#[from] serde_json::Error),
}

// ---------------------------------------------------------------------------
// Configuration
// ---------------------------------------------------------------------------

/// Synthetic styled-agent parameters in the run config.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SyntheticSpec {
    pub p_follow_context: f64,
    pub p_follow_memory: f64,
    pub p_invalid: f64,
    pub intervention_delta: f64,
    /// Fraction of samples whose memory letter is the golden one.
    pub memory_correct_fraction: f64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        SyntheticSpec {
            p_follow_context: 0.6,
            p_follow_memory: 0.3,
            p_invalid: 0.1,
            intervention_delta: 0.3,
            memory_correct_fraction: 0.5,
        }
    }
}

/// One model entry in the run config.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ModelSpec {
    pub name: String,
    pub backend: BackendKind,
    pub endpoint: Option<String>,
    pub api_key_env: String,
    /// Replay cache path: the source for replay backends, the mirror for
    /// remote backends.
    pub replay_cache: Option<PathBuf>,
    /// Script file for fixed-script backends.
    pub script: Option<PathBuf>,
    pub synthetic: Option<SyntheticSpec>,
    pub max_output_tokens: u32,
    pub temperature: f64,
    pub parallelism: usize,
    pub retry: RetryPolicy,
    pub rate_per_minute: Option<u32>,
}

impl Default for ModelSpec {
    fn default() -> Self {
        ModelSpec {
            name: String::new(),
            backend: BackendKind::Synthetic,
            endpoint: None,
            api_key_env: "KRE_API_KEY".to_string(),
            replay_cache: None,
            script: None,
            synthetic: Some(SyntheticSpec::default()),
            max_output_tokens: 520,
            temperature: 0.0,
            parallelism: 1,
            retry: RetryPolicy::default(),
            rate_per_minute: None,
        }
    }
}

/// The run configuration; usually loaded from a TOML or JSON file by the CLI.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub dataset: PathBuf,
    /// Source items for the build stage; the built dataset lands in the
    /// output directory and replaces `dataset` for later stages.
    pub source_items: Option<PathBuf>,
    pub output_dir: PathBuf,
    /// Bundled pools are used when these are unset.
    pub instruction_pool: Option<PathBuf>,
    pub example_pool: Option<PathBuf>,
    pub seed: u64,
    pub thresholds: StyleThresholds,
    /// Stratified subset size for instruction selection.
    pub selection_subset: usize,
    /// Which hint group drives the main evaluation.
    pub eval_hint: bool,
    /// Explicit instruction overrides; otherwise the selection artifact (or
    /// the first instruction of the group) decides.
    pub zero_shot_instruction: Option<String>,
    pub few_shot_instruction: Option<String>,
    pub include_reasoning: bool,
    pub max_prompt_chars: Option<usize>,
    /// Replay misses fail instead of falling through to a remote endpoint.
    pub strict_replay: bool,
    pub build: BuildOptions,
    pub models: Vec<ModelSpec>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            dataset: PathBuf::new(),
            source_items: None,
            output_dir: PathBuf::from("kre-out"),
            instruction_pool: None,
            example_pool: None,
            seed: 0,
            thresholds: StyleThresholds::default(),
            selection_subset: 200,
            eval_hint: false,
            zero_shot_instruction: None,
            few_shot_instruction: None,
            include_reasoning: true,
            max_prompt_chars: None,
            strict_replay: true,
            build: BuildOptions::default(),
            models: Vec::new(),
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, PipelineError> {
        let text = std::fs::read_to_string(path)?;
        let config: RunConfig = if path.extension().is_some_and(|e| e == "json") {
            serde_json::from_str(&text)?
        } else {
            toml::from_str(&text).map_err(|e| PipelineError::Config(e.to_string()))?
        };
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), PipelineError> {
        if self.models.is_empty() {
            return Err(PipelineError::Config("no models configured".into()));
        }
        let mut names = std::collections::HashSet::new();
        for m in &self.models {
            if m.name.trim().is_empty() {
                return Err(PipelineError::Config("model with empty name".into()));
            }
            if !names.insert(m.name.clone()) {
                return Err(PipelineError::Config(format!("duplicate model '{}'", m.name)));
            }
            match m.backend {
                BackendKind::Remote if m.endpoint.is_none() => {
                    return Err(PipelineError::Config(format!(
                        "model '{}' is remote but has no endpoint",
                        m.name
                    )));
                }
                BackendKind::Replay if m.replay_cache.is_none() => {
                    return Err(PipelineError::Config(format!(
                        "model '{}' replays but has no replay_cache",
                        m.name
                    )));
                }
                BackendKind::FixedScript if m.script.is_none() => {
                    return Err(PipelineError::Config(format!(
                        "model '{}' is scripted but has no script file",
                        m.name
                    )));
                }
                BackendKind::Synthetic if m.synthetic.is_none() => {
                    return Err(PipelineError::Config(format!(
                        "model '{}' is synthetic but has no synthetic params",
                        m.name
                    )));
                }
                _ => {}
            }
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Stages
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Build,
    Assess,
    Select,
    Robustness,
    Fewshot,
    Dmss,
    Roleplay,
    Report,
}

impl Stage {
    pub const ORDER: [Stage; 8] = [
        Stage::Build,
        Stage::Assess,
        Stage::Select,
        Stage::Robustness,
        Stage::Fewshot,
        Stage::Dmss,
        Stage::Roleplay,
        Stage::Report,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Stage::Build => "build",
            Stage::Assess => "assess",
            Stage::Select => "select",
            Stage::Robustness => "robustness",
            Stage::Fewshot => "fewshot",
            Stage::Dmss => "dmss",
            Stage::Roleplay => "roleplay",
            Stage::Report => "report",
        }
    }
}

impl std::str::FromStr for Stage {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Stage::ORDER
            .iter()
            .find(|st| st.name() == s)
            .copied()
            .ok_or_else(|| format!("unknown stage '{s}'"))
    }
}

/// Wrapper stamped onto every JSON artifact.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Artifact<T> {
    pub meta: ArtifactMeta,
    pub data: T,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArtifactMeta {
    pub config_hash: String,
    pub seed: u64,
    pub parser_version: String,
    /// Instruction ids in effect, keyed by purpose.
    pub instructions: BTreeMap<String, String>,
}

fn write_artifact<T: Serialize>(path: &Path, artifact: &Artifact<T>) -> Result<(), PipelineError> {
    let mut text = serde_json::to_string_pretty(artifact)?;
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}

fn read_artifact<T: for<'de> Deserialize<'de>>(
    path: &Path,
    stage: &str,
) -> Result<Artifact<T>, PipelineError> {
    if !path.exists() {
        return Err(PipelineError::StageDependency(format!(
            "missing artifact {}; run the '{stage}' stage first",
            path.display()
        )));
    }
    Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct ZeroShotArtifact {
    scores: RobustnessScores,
    outcomes: ConflictOutcomes,
    dmss_baseline: f64,
}

/// What a run produced, for logging and tests.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct RunSummary {
    pub config_hash: String,
    pub stages: Vec<String>,
    pub artifacts: Vec<PathBuf>,
    pub backend_calls: BTreeMap<String, usize>,
    pub ledger_hits: BTreeMap<String, usize>,
}

fn sanitize(name: &str) -> String {
    name.chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '-' })
        .collect()
}

fn file_digest(path: &Path) -> Result<String, PipelineError> {
    let bytes = std::fs::read(path)?;
    Ok(hex_digest(&bytes))
}

fn hex_digest(bytes: &[u8]) -> String {
    Sha256::digest(bytes)
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

/// Hash of everything that influences results. Execution knobs
/// (parallelism, retry, rate caps) are deliberately not included.
fn config_hash(config: &RunConfig, dataset_path: &Path) -> Result<String, PipelineError> {
    #[derive(Serialize)]
    struct SemanticModel<'a> {
        name: &'a str,
        backend: BackendKind,
        endpoint: &'a Option<String>,
        synthetic: &'a Option<SyntheticSpec>,
        max_output_tokens: u32,
        temperature: f64,
    }
    #[derive(Serialize)]
    struct Semantic<'a> {
        dataset_digest: String,
        instruction_pool_digest: String,
        example_pool_digest: String,
        seed: u64,
        thresholds: &'a StyleThresholds,
        selection_subset: usize,
        eval_hint: bool,
        zero_shot_instruction: &'a Option<String>,
        few_shot_instruction: &'a Option<String>,
        include_reasoning: bool,
        models: Vec<SemanticModel<'a>>,
    }
    let semantic = Semantic {
        dataset_digest: file_digest(dataset_path)?,
        instruction_pool_digest: match &config.instruction_pool {
            Some(p) => file_digest(p)?,
            None => hex_digest(crate::builder::instructions::BUNDLED_POOL_JSONL.as_bytes()),
        },
        example_pool_digest: match &config.example_pool {
            Some(p) => file_digest(p)?,
            None => hex_digest(crate::prompt::BUNDLED_EXAMPLE_POOL_JSONL.as_bytes()),
        },
        seed: config.seed,
        thresholds: &config.thresholds,
        selection_subset: config.selection_subset,
        eval_hint: config.eval_hint,
        zero_shot_instruction: &config.zero_shot_instruction,
        few_shot_instruction: &config.few_shot_instruction,
        include_reasoning: config.include_reasoning,
        models: config
            .models
            .iter()
            .map(|m| SemanticModel {
                name: &m.name,
                backend: m.backend,
                endpoint: &m.endpoint,
                synthetic: &m.synthetic,
                max_output_tokens: m.max_output_tokens,
                temperature: m.temperature,
            })
            .collect(),
    };
    Ok(hex_digest(serde_json::to_string(&semantic)?.as_bytes()))
}

fn build_backend(
    spec: &ModelSpec,
    config: &RunConfig,
    set: &SampleSet,
) -> Result<Box<dyn CompletionBackend>, PipelineError> {
    let model_config = ModelConfig {
        name: spec.name.clone(),
        backend: spec.backend,
        endpoint: spec.endpoint.clone(),
        api_key_env: spec.api_key_env.clone(),
        max_output_tokens: spec.max_output_tokens,
        temperature: spec.temperature,
        parallelism: spec.parallelism,
        retry: spec.retry.clone(),
        rate_per_minute: spec.rate_per_minute,
    };
    match spec.backend {
        BackendKind::Synthetic => {
            let synth = spec.synthetic.as_ref().expect("validated");
            let table = memory_table(set, synth.memory_correct_fraction, config.seed);
            let params = StyleParams::new(
                synth.p_follow_context,
                synth.p_follow_memory,
                synth.p_invalid,
                config.seed,
            )
            .with_memory_table(table)
            .with_intervention_delta(synth.intervention_delta);
            Ok(Box::new(SyntheticBackend::new(&spec.name, set, params)?))
        }
        BackendKind::FixedScript => {
            let path = spec.script.as_ref().expect("validated");
            Ok(Box::new(FixedScriptBackend::from_file(&spec.name, path)?))
        }
        BackendKind::Replay => {
            let cache = Arc::new(ReplayCache::open(spec.replay_cache.as_ref().expect("validated"))?);
            if config.strict_replay || spec.endpoint.is_none() {
                Ok(Box::new(crate::gateway::replay::ReplayBackend::strict(
                    cache, &spec.name,
                )))
            } else {
                let remote = RemoteBackend::new(model_config)?;
                Ok(Box::new(crate::gateway::replay::ReplayBackend::with_fallback(
                    cache,
                    &spec.name,
                    Box::new(remote),
                )))
            }
        }
        BackendKind::Remote => {
            let mut remote = RemoteBackend::new(model_config)?;
            if let Some(cache_path) = &spec.replay_cache {
                remote = remote.with_log(Arc::new(ReplayCache::open(cache_path)?));
            }
            Ok(Box::new(remote))
        }
    }
}

struct InstructionChoice {
    zero_shot: Instruction,
    few_shot: Option<Instruction>,
}

/// Resolve the instructions the main evaluation runs under: explicit config
/// override, then the selection artifact, then the first instruction of the
/// matching pool group.
fn resolve_instructions(
    config: &RunConfig,
    pool: &InstructionPool,
    model_dir: &Path,
) -> Result<InstructionChoice, PipelineError> {
    let from_selection = |setting: Setting| -> Option<String> {
        let path = model_dir.join("selection.json");
        let artifact: Artifact<Vec<GroupSelection>> = read_artifact(&path, "select").ok()?;
        artifact
            .data
            .iter()
            .find(|g| g.setting == setting && g.hint == config.eval_hint)
            .map(|g| g.best_id.clone())
    };
    let lookup = |id: &str| -> Result<Instruction, PipelineError> {
        pool.get(id)
            .cloned()
            .ok_or_else(|| PipelineError::Config(format!("instruction '{id}' not in pool")))
    };
    let zero_shot = match &config.zero_shot_instruction {
        Some(id) => lookup(id)?,
        None => match from_selection(Setting::ZeroShot) {
            Some(id) => lookup(&id)?,
            None => pool
                .group(Setting::ZeroShot, config.eval_hint)
                .first()
                .map(|i| (*i).clone())
                .ok_or_else(|| PipelineError::Config("instruction pool has no zero-shot group".into()))?,
        },
    };
    let few_shot = match &config.few_shot_instruction {
        Some(id) => Some(lookup(id)?),
        None => match from_selection(Setting::FewShot) {
            Some(id) => Some(lookup(&id)?),
            None => pool
                .group(Setting::FewShot, config.eval_hint)
                .first()
                .map(|i| (*i).clone()),
        },
    };
    Ok(InstructionChoice {
        zero_shot,
        few_shot,
    })
}

// ---------------------------------------------------------------------------
// The pipeline
// ---------------------------------------------------------------------------

/// Execute the requested stages in dependency order.
pub fn run_pipeline(config: &RunConfig, stages: &[Stage]) -> Result<RunSummary, PipelineError> {
    config.validate()?;
    let requested: Vec<Stage> = Stage::ORDER
        .iter()
        .copied()
        .filter(|s| stages.contains(s))
        .collect();
    if requested.is_empty() {
        return Err(PipelineError::Config("no stages requested".into()));
    }
    std::fs::create_dir_all(&config.output_dir)?;

    let mut summary = RunSummary::default();
    let built_dataset = config.output_dir.join("dataset.jsonl");

    // Build stage runs before anything touches the dataset.
    if requested.contains(&Stage::Build) {
        let source_path = config.source_items.as_ref().ok_or_else(|| {
            PipelineError::Config("build stage requires source_items".into())
        })?;
        let items = builder::load_source_items(source_path)?;
        let backend = builder::generation::TemplateBackend;
        let set = builder::build_dataset("dataset", &items, &backend, &config.build)?;
        set.write_jsonl(&built_dataset)?;
        DatasetManifest::for_set(&set).write(&config.output_dir.join("dataset.manifest.json"))?;
        summary.artifacts.push(built_dataset.clone());
        summary.stages.push(Stage::Build.name().to_string());
    }

    let dataset_path = if built_dataset.exists() {
        built_dataset.clone()
    } else {
        config.dataset.clone()
    };
    if !dataset_path.exists() {
        return Err(PipelineError::Config(format!(
            "dataset {} does not exist (run the build stage or fix the path)",
            dataset_path.display()
        )));
    }
    let set = load_dataset(&dataset_path, DatasetFormat::KreJsonl)?;
    let hash = config_hash(config, &dataset_path)?;
    summary.config_hash = hash.clone();

    let instruction_pool = match &config.instruction_pool {
        Some(p) => InstructionPool::load(p)?,
        None => InstructionPool::bundled(),
    };
    let example_pool = match &config.example_pool {
        Some(p) => ExamplePool::load(p)?,
        None => ExamplePool::bundled(),
    };
    let memory_instruction = Instruction::memory_assessment();

    let per_model_stages: Vec<Stage> = requested
        .iter()
        .copied()
        .filter(|s| !matches!(s, Stage::Build | Stage::Report))
        .collect();

    for spec in &config.models {
        if per_model_stages.is_empty() {
            break;
        }
        let model_dir = config.output_dir.join(sanitize(&spec.name));
        std::fs::create_dir_all(&model_dir)?;
        let backend = build_backend(spec, config, &set)?;
        let header = LedgerHeader {
            model: spec.name.clone(),
            config_hash: hash.clone(),
            seed: config.seed,
            parser_version: PARSER_VERSION.to_string(),
        };
        let ledger = Ledger::open(&model_dir.join("ledger.jsonl"), header)?;
        let options = EngineOptions {
            parallelism: spec.parallelism,
            rate_per_minute: spec.rate_per_minute,
            include_reasoning: config.include_reasoning,
            max_prompt_chars: config.max_prompt_chars,
            fewshot_seed: config.seed,
        };
        let mut evaluator = Evaluator::new(backend.as_ref(), options, ledger);
        let choice = resolve_instructions(config, &instruction_pool, &model_dir)?;
        let mut meta_instructions = BTreeMap::new();
        meta_instructions.insert("memory".to_string(), memory_instruction.id.clone());
        meta_instructions.insert("zero_shot".to_string(), choice.zero_shot.id.clone());
        if let Some(fs) = &choice.few_shot {
            meta_instructions.insert("few_shot".to_string(), fs.id.clone());
        }
        let meta = ArtifactMeta {
            config_hash: hash.clone(),
            seed: config.seed,
            parser_version: PARSER_VERSION.to_string(),
            instructions: meta_instructions.clone(),
        };

        let profile_path = model_dir.join("memory_profile.json");
        let zero_shot_path = model_dir.join("zero_shot.json");

        let load_profile = |path: &Path| -> Result<MemoryProfile, PipelineError> {
            Ok(read_artifact::<MemoryProfile>(path, "assess")?.data)
        };

        for stage in &per_model_stages {
            match stage {
                Stage::Assess => {
                    let profile = evaluator.assess_memory(&set, &memory_instruction)?;
                    write_artifact(&profile_path, &Artifact {
                        meta: meta.clone(),
                        data: profile,
                    })?;
                    summary.artifacts.push(profile_path.clone());
                }
                Stage::Select => {
                    let profile = load_profile(&profile_path)?;
                    let subset = crate::engine::stratified_subset(
                        &set,
                        &profile,
                        config.selection_subset,
                        config.seed,
                    )?;
                    let selections = evaluator.select_instruction(
                        &instruction_pool,
                        &subset,
                        &profile,
                        Some(&example_pool),
                    )?;
                    let path = model_dir.join("selection.json");
                    write_artifact(&path, &Artifact {
                        meta: meta.clone(),
                        data: selections,
                    })?;
                    summary.artifacts.push(path);
                }
                Stage::Robustness => {
                    let profile = load_profile(&profile_path)?;
                    // Selection may have run in this invocation; re-resolve.
                    let choice = resolve_instructions(config, &instruction_pool, &model_dir)?;
                    let (scores, outcomes) =
                        evaluator.eval_robustness(&profile, &set, &choice.zero_shot)?;
                    let effective = effective_profile(&profile, &outcomes);
                    let dmss_baseline = compute_dmss(&effective, &outcomes, &set)?;
                    let mut meta = meta.clone();
                    meta.instructions
                        .insert("zero_shot".to_string(), choice.zero_shot.id.clone());
                    write_artifact(&zero_shot_path, &Artifact {
                        meta,
                        data: ZeroShotArtifact {
                            scores,
                            outcomes,
                            dmss_baseline,
                        },
                    })?;
                    summary.artifacts.push(zero_shot_path.clone());
                }
                Stage::Fewshot => {
                    let profile = load_profile(&profile_path)?;
                    let choice = resolve_instructions(config, &instruction_pool, &model_dir)?;
                    let instruction = choice.few_shot.ok_or_else(|| {
                        PipelineError::Config("no few-shot instruction available".into())
                    })?;
                    let scores = evaluator.eval_fewshot(
                        &profile,
                        &set,
                        &instruction,
                        &example_pool,
                        Phase::FewShot,
                    )?;
                    let path = model_dir.join("few_shot.json");
                    let mut meta = meta.clone();
                    meta.instructions
                        .insert("few_shot".to_string(), instruction.id.clone());
                    write_artifact(&path, &Artifact { meta, data: scores })?;
                    summary.artifacts.push(path);
                }
                Stage::Dmss => {
                    let zs: Artifact<ZeroShotArtifact> =
                        read_artifact(&zero_shot_path, "robustness")?;
                    let verdict = StyleVerdict {
                        dmss: zs.data.dmss_baseline,
                        style: classify_style(
                            zs.data.dmss_baseline,
                            zs.data.scores.fr,
                            &config.thresholds,
                        ),
                        thresholds: config.thresholds,
                    };
                    let path = model_dir.join("style.json");
                    write_artifact(&path, &Artifact {
                        meta: meta.clone(),
                        data: verdict,
                    })?;
                    summary.artifacts.push(path);
                }
                Stage::Roleplay => {
                    let profile = load_profile(&profile_path)?;
                    let zs: Artifact<ZeroShotArtifact> =
                        read_artifact(&zero_shot_path, "robustness")?;
                    let choice = resolve_instructions(config, &instruction_pool, &model_dir)?;
                    let baseline = ConditionMetrics {
                        scores: zs.data.scores.clone(),
                        dmss: zs.data.dmss_baseline,
                    };
                    let summary_data = evaluator.run_role_intervention(
                        &profile,
                        &set,
                        &choice.zero_shot,
                        baseline,
                    )?;
                    let path = model_dir.join("intervention.json");
                    write_artifact(&path, &Artifact {
                        meta: meta.clone(),
                        data: summary_data,
                    })?;
                    summary.artifacts.push(path);
                }
                Stage::Build | Stage::Report => unreachable!("run-level stages"),
            }
            if !summary.stages.contains(&stage.name().to_string()) {
                summary.stages.push(stage.name().to_string());
            }
        }
        summary
            .backend_calls
            .insert(spec.name.clone(), evaluator.backend_calls);
        summary
            .ledger_hits
            .insert(spec.name.clone(), evaluator.ledger_hits);
    }

    if requested.contains(&Stage::Report) {
        let mut inputs = Vec::new();
        let mut instructions = BTreeMap::new();
        for spec in &config.models {
            let model_dir = config.output_dir.join(sanitize(&spec.name));
            let zs: Artifact<ZeroShotArtifact> =
                read_artifact(&model_dir.join("zero_shot.json"), "robustness")?;
            let style: Artifact<StyleVerdict> =
                read_artifact(&model_dir.join("style.json"), "dmss")?;
            let intervention: Artifact<InterventionSummary> =
                read_artifact(&model_dir.join("intervention.json"), "roleplay")?;
            let scores = &zs.data.scores;
            let (vr, rr) = match (scores.vr, scores.rr) {
                (Some(vr), Some(rr)) => (vr, rr),
                _ => {
                    return Err(PipelineError::StageDependency(format!(
                        "model '{}' has an undefined VR or RR; cannot rank",
                        spec.name
                    )))
                }
            };
            if let Some(id) = zs.meta.instructions.get("zero_shot") {
                instructions.insert(spec.name.clone(), id.clone());
            }
            inputs.push(LeaderboardInput {
                model: spec.name.clone(),
                vr,
                rr,
                fr: scores.fr,
                fr_upper: intervention.data.fr_upper,
                dmss: style.data.dmss,
                style: Some(style.data.style),
                adaptivity: intervention.data.adaptivity,
                misleading_count: Some(scores.misleading_count),
                invalid_count: Some(scores.invalid_count),
            });
        }
        let rows = build_leaderboard(&inputs, &config.thresholds)?;
        let report_meta = ReportMeta {
            config_hash: hash.clone(),
            seed: config.seed,
            parser_version: PARSER_VERSION.to_string(),
            instructions,
        };
        let written = emit_report(
            &rows,
            &[ReportFormat::Csv, ReportFormat::Markdown, ReportFormat::Json],
            &config.output_dir,
            &report_meta,
        )?;
        summary.artifacts.extend(written);
        summary.stages.push(Stage::Report.name().to_string());
    }

    let run_meta = serde_json::json!({
        "config_hash": hash,
        "seed": config.seed,
        "parser_version": PARSER_VERSION,
        "mixed_composition": "2 correct + 1 incorrect, seed-shuffled",
        "prompt_transport": "whole prompt as a single user message",
        "selection_subset": config.selection_subset,
        "eval_hint": config.eval_hint,
        "include_reasoning": config.include_reasoning,
    });
    let mut text = serde_json::to_string_pretty(&run_meta)?;
    text.push('\n');
    std::fs::write(config.output_dir.join("run_meta.json"), text)?;

    Ok(summary)
}

/// Export every (model, prompt hash, response) pair from the run ledgers as
/// a replay cache. Prompt text is not stored in ledgers; assembly is
/// deterministic, so hashes are sufficient replay keys.
pub fn replay_export(config: &RunConfig, out: &Path) -> Result<usize, PipelineError> {
    use std::io::Write as _;
    let mut file = std::fs::File::create(out)?;
    let mut exported = 0usize;
    for spec in &config.models {
        let ledger_path = config.output_dir.join(sanitize(&spec.name)).join("ledger.jsonl");
        if !ledger_path.exists() {
            continue;
        }
        let text = std::fs::read_to_string(&ledger_path)?;
        for line in text.lines().skip(1).filter(|l| !l.trim().is_empty()) {
            let entry: crate::engine::LedgerEntry = serde_json::from_str(line)
                .map_err(|e| PipelineError::Config(format!("corrupt ledger line: {e}")))?;
            let record = ReplayRecord {
                model: spec.name.clone(),
                prompt_hash: entry.prompt_hash,
                prompt: String::new(),
                response: entry.response,
                timestamp: 0,
            };
            writeln!(file, "{}", serde_json::to_string(&record)?)?;
            exported += 1;
        }
    }
    Ok(exported)
}
