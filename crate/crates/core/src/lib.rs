//! Evaluation harness for knowledge-conflict multiple-choice QA.
//!
//! The harness builds conflict datasets (a question whose prompt context
//! supports one answer while the model's memory supports another), runs
//! language models through a five-stage pipeline, and reports factual
//! robustness, decision-style, and role-play intervention metrics:
//!
//! 1. **Memory assessment** — answer every question with no context,
//!    partitioning the dataset into memory-known (`D+`) and memory-unknown
//!    (`D-`) samples.
//! 2. **Instruction selection** — pick the best-performing instruction from
//!    the bundled pool on a stratified subset.
//! 3. **Factual robustness** — vulnerable robustness (VR: correct despite a
//!    misleading context), resilient robustness (RR: correct thanks to a
//!    golden context), and their mean FR; zero-shot and few-shot.
//! 4. **Decision style** — a score in [-1, 1] separating memory-driven
//!    (intuitive) from prompt-driven (dependent) behaviour, with a style
//!    label derived from it.
//! 5. **Role-play intervention** — re-run the conflict evaluation under
//!    intuitive/dependent role prefixes; measure adaptivity and the
//!    best-case FR upper bound; emit a ranked leaderboard.
//!
//! Module map:
//!
//! - [`sample`] — the canonical conflict-sample data model and `kre-jsonl` I/O
//! - [`builder`] — conflict construction (misleading options, negative
//!   contexts, instruction pool, annotation sheets)
//! - [`prompt`] — deterministic prompt assembly for every pipeline condition
//! - [`gateway`] — the "ask a model" boundary: remote HTTP, replay cache,
//!   scripted, and synthetic styled-agent backends with bounded concurrency
//! - [`parser`] — free-text completion to option-letter decision
//! - [`engine`] — the five-stage pipeline and all metric computation
//! - [`report`] — leaderboard construction and CSV/markdown/JSON emission
//! - [`pipeline`] — run configuration, stage orchestration, resume

pub mod builder;
pub mod engine;
pub mod gateway;
pub mod parser;
pub mod pipeline;
pub mod prompt;
pub mod report;
pub mod sample;
