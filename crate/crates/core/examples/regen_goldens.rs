//! Regenerates the golden fixture files under `fixtures/golden/` and the
//! mini-dataset manifest. Run after an intentional format change, then review
//! the diff:
//!
//! ```text
//! cargo run -p kre-core --example regen_goldens
//! ```

use std::fs;
use std::path::Path;

use kre_core::builder::InstructionPool;
use kre_core::prompt::{
    assemble, assemble_fewshot, ContextVariant, ExampleMix, ExamplePool, FewShotConfig,
    PromptSpec, Role, Scenario,
};
use kre_core::report::{build_leaderboard, leaderboard_markdown, LeaderboardInput, ReportMeta};
use kre_core::sample::{corpus_stats, load_dataset, DatasetFormat, DatasetManifest};

fn main() {
    let fixtures = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures");
    let golden = fixtures.join("golden");
    fs::create_dir_all(&golden).expect("mkdir golden");

    let set = load_dataset(&fixtures.join("kre_mini.jsonl"), DatasetFormat::KreJsonl)
        .expect("mini fixture loads");
    let stats = corpus_stats(&set);
    assert_eq!(stats.total, 12);
    let manifest = DatasetManifest {
        name: "kre_mini".to_string(),
        provenance: "bundled desk-scale fixture".to_string(),
        counts: stats.counts,
        total: stats.total,
    };
    manifest
        .write(&fixtures.join("kre_mini.manifest.json"))
        .expect("manifest writes");

    let target = set.get("mini-musique-01").expect("target sample");
    let pool = ExamplePool::bundled();
    let instructions = InstructionPool::bundled();
    let few_shot_instruction = instructions.get("fs-nohint-01").expect("bundled id");
    let zero_shot_instruction = instructions.get("zs-nohint-06").expect("bundled id");

    // Role x mix x context-variant prompt matrix.
    for role in [Role::Intuitive, Role::Dependent] {
        for mix in ExampleMix::ALL {
            for variant in [ContextVariant::Positive, ContextVariant::Negative] {
                let scenario = match variant {
                    ContextVariant::Negative => Scenario::Vulnerable,
                    _ => Scenario::Resilient,
                };
                let examples =
                    assemble_fewshot(&pool, target, FewShotConfig { mix, scenario }, 42)
                        .expect("examples assemble");
                let spec = PromptSpec::new(few_shot_instruction, target, variant)
                    .with_role(role)
                    .with_examples(examples);
                let prompt = assemble(&spec).expect("assembles");
                let name = format!(
                    "prompt_{}_{}_{}.txt",
                    match role {
                        Role::Intuitive => "intuitive",
                        Role::Dependent => "dependent",
                        Role::None => "none",
                    },
                    match mix {
                        ExampleMix::AllPositive => "allpos",
                        ExampleMix::AllNegative => "allneg",
                        ExampleMix::Mixed => "mixed",
                    },
                    match variant {
                        ContextVariant::Positive => "pos",
                        ContextVariant::Negative => "neg",
                        ContextVariant::None => "none",
                    },
                );
                fs::write(golden.join(name), prompt).expect("golden writes");
            }
        }
    }

    // Plain zero-shot prompt and the no-context memory prompt.
    let zs = assemble(&PromptSpec::new(
        zero_shot_instruction,
        target,
        ContextVariant::Negative,
    ))
    .expect("assembles");
    fs::write(golden.join("prompt_zero_shot_neg.txt"), zs).expect("golden writes");
    let memory_instruction = kre_core::builder::Instruction::memory_assessment();
    let memory = assemble(&PromptSpec::new(
        &memory_instruction,
        target,
        ContextVariant::None,
    ))
    .expect("assembles");
    fs::write(golden.join("prompt_memory.txt"), memory).expect("golden writes");

    // Leaderboard markdown for the published reference rows.
    #[derive(serde::Deserialize)]
    struct PublishedRow {
        model: String,
        vr: f64,
        rr: f64,
        fr: f64,
        fr_upper: f64,
        dmss: f64,
        adaptivity: f64,
        #[allow(dead_code)]
        style: String,
        #[allow(dead_code)]
        fr_rank: usize,
        #[allow(dead_code)]
        adapt_rank: usize,
        #[allow(dead_code)]
        overall_rank: usize,
    }
    let rows: Vec<PublishedRow> = serde_json::from_str(
        &fs::read_to_string(fixtures.join("published_scores.json")).expect("fixture"),
    )
    .expect("fixture parses");
    let inputs: Vec<LeaderboardInput> = rows
        .iter()
        .map(|r| LeaderboardInput {
            model: r.model.clone(),
            vr: r.vr / 100.0,
            rr: r.rr / 100.0,
            fr: Some(r.fr / 100.0),
            fr_upper: Some(r.fr_upper / 100.0),
            dmss: r.dmss,
            style: None,
            adaptivity: r.adaptivity,
            misleading_count: None,
            invalid_count: None,
        })
        .collect();
    let table = build_leaderboard(&inputs, &Default::default()).expect("builds");
    let meta = ReportMeta {
        config_hash: "published-reference".to_string(),
        seed: 0,
        parser_version: kre_core::parser::PARSER_VERSION.to_string(),
        instructions: Default::default(),
    };
    fs::write(
        golden.join("leaderboard_reference.md"),
        leaderboard_markdown(&table, &meta),
    )
    .expect("golden writes");

    println!("regenerated goldens under {}", golden.display());
}
