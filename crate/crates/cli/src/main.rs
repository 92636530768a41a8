//! `kre` — drive the knowledge-conflict evaluation pipeline from a run
//! configuration file.
//!
//! Each subcommand maps to one pipeline stage; `run` executes any subset in
//! dependency order. Work already recorded in a model's run ledger is never
//! re-sent to a backend, so re-invocations resume where they stopped.

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};

use kre_core::pipeline::{replay_export, run_pipeline, RunConfig, RunSummary, Stage};

#[derive(Parser)]
#[command(
    name = "kre",
    version,
    about = "Knowledge-conflict robustness evaluation harness"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Run configuration file (TOML or JSON).
    #[arg(short, long)]
    config: PathBuf,
    /// Override the configured output directory.
    #[arg(long)]
    output_dir: Option<PathBuf>,
    /// Override per-model parallelism.
    #[arg(long)]
    parallelism: Option<usize>,
    /// Replay-cache misses fail instead of falling through to the remote
    /// endpoint.
    #[arg(long)]
    strict_replay: Option<bool>,
}

#[derive(Subcommand)]
enum Command {
    /// Construct the conflict dataset from source items.
    Build(Common),
    /// Memory assessment: partition samples by no-context correctness.
    Assess(Common),
    /// Score every pool instruction on a stratified subset and pick the best
    /// per (setting, hint) group.
    SelectInstruction(Common),
    /// Conflict robustness evaluation (VR/RR/FR), zero-shot by default.
    Eval {
        #[command(flatten)]
        common: Common,
        /// Also run the few-shot example configurations.
        #[arg(long)]
        few_shot: bool,
    },
    /// Decision-style score and label from the stored zero-shot outcomes.
    Dmss(Common),
    /// Role-play intervention: per-role scores, adaptivity, FR upper bound.
    Roleplay(Common),
    /// Build the ranked leaderboard and emit CSV, markdown, and JSON.
    Report(Common),
    /// Export run-ledger responses as a replay cache file.
    ReplayExport {
        #[command(flatten)]
        common: Common,
        /// Destination replay-cache path.
        #[arg(long)]
        out: PathBuf,
    },
    /// Run a comma-separated list of stages in dependency order.
    Run {
        #[command(flatten)]
        common: Common,
        /// Stages: build,assess,select,robustness,fewshot,dmss,roleplay,report
        #[arg(long, value_delimiter = ',', required = true)]
        stages: Vec<String>,
    },
}

fn load_config(common: &Common) -> Result<RunConfig> {
    let mut config = RunConfig::load(&common.config)
        .with_context(|| format!("loading config {}", common.config.display()))?;
    if let Some(dir) = &common.output_dir {
        config.output_dir = dir.clone();
    }
    if let Some(p) = common.parallelism {
        for m in &mut config.models {
            m.parallelism = p;
        }
    }
    if let Some(strict) = common.strict_replay {
        config.strict_replay = strict;
    }
    Ok(config)
}

fn print_summary(summary: &RunSummary) {
    for (model, calls) in &summary.backend_calls {
        let hits = summary.ledger_hits.get(model).copied().unwrap_or(0);
        eprintln!("{model}: {calls} backend call(s), {hits} ledger hit(s)");
    }
    println!(
        "{}",
        serde_json::to_string_pretty(summary).expect("summary serializes")
    );
}

fn execute(common: &Common, stages: &[Stage]) -> Result<()> {
    let config = load_config(common)?;
    let summary = run_pipeline(&config, stages)?;
    print_summary(&summary);
    Ok(())
}

fn real_main() -> Result<()> {
    let cli = Cli::parse();
    match &cli.command {
        Command::Build(c) => execute(c, &[Stage::Build]),
        Command::Assess(c) => execute(c, &[Stage::Assess]),
        Command::SelectInstruction(c) => execute(c, &[Stage::Select]),
        Command::Eval { common, few_shot } => {
            let mut stages = vec![Stage::Robustness];
            if *few_shot {
                stages.push(Stage::Fewshot);
            }
            execute(common, &stages)
        }
        Command::Dmss(c) => execute(c, &[Stage::Dmss]),
        Command::Roleplay(c) => execute(c, &[Stage::Roleplay]),
        Command::Report(c) => execute(c, &[Stage::Report]),
        Command::ReplayExport { common, out } => {
            let config = load_config(common)?;
            let exported = replay_export(&config, out)?;
            println!(
                "{}",
                serde_json::json!({ "exported": exported, "path": out })
            );
            Ok(())
        }
        Command::Run { common, stages } => {
            let parsed: Result<Vec<Stage>, String> =
                stages.iter().map(|s| s.trim().parse()).collect();
            let parsed = parsed.map_err(|e| anyhow::anyhow!(e))?;
            execute(common, &parsed)
        }
    }
}

fn main() -> ExitCode {
    match real_main() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!(
                "{}",
                serde_json::json!({ "error": format!("{e:#}") })
            );
            ExitCode::FAILURE
        }
    }
}
