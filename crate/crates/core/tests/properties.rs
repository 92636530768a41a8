//! Property tests for the format round-trip, the parser's totality, and the
//! construction invariants.

use std::collections::BTreeMap;

use proptest::prelude::*;

use kre_core::builder::{select_negative_answer, substitute_entity};
use kre_core::parser::{count_outcomes, normalize, parse_choice, Verdict};
use kre_core::sample::{
    corpus_stats, load_dataset, ConflictSample, Corpus, DatasetFormat, OptionLetter, SampleSet,
    TaskKind,
};

fn corpus_strategy() -> impl Strategy<Value = Corpus> {
    prop_oneof![
        Just(Corpus::MuSiQue),
        Just(Corpus::SquadV2),
        Just(Corpus::Ecqa),
        Just(Corpus::ECare),
        Just(Corpus::Custom),
    ]
}

prop_compose! {
    fn sample_strategy(index: usize)(
        corpus in corpus_strategy(),
        n_options in 2usize..=5,
        golden_pick in 0usize..5,
        negative_pick in 0usize..4,
        question in ".{0,40}",
        context in ".{1,60}",
    ) -> ConflictSample {
        let mut options = BTreeMap::new();
        for k in 0..n_options {
            options.insert(
                OptionLetter::from_index(k).unwrap(),
                format!("option {index}-{k}"),
            );
        }
        let golden_idx = golden_pick % n_options;
        let mut negative_idx = negative_pick % n_options;
        if negative_idx == golden_idx {
            negative_idx = (negative_idx + 1) % n_options;
        }
        ConflictSample {
            id: format!("p-{index}"),
            corpus,
            task_kind: TaskKind::Cr,
            question,
            options,
            golden: OptionLetter::from_index(golden_idx).unwrap(),
            negative: OptionLetter::from_index(negative_idx).unwrap(),
            positive_context: format!("{context}+"),
            negative_context: format!("{context}-"),
            answerable: true,
        }
    }
}

fn set_strategy(max: usize) -> impl Strategy<Value = SampleSet> {
    prop::collection::vec(Just(()), 0..max)
        .prop_flat_map(|slots| {
            slots
                .iter()
                .enumerate()
                .map(|(i, _)| sample_strategy(i))
                .collect::<Vec<_>>()
        })
        .prop_map(|samples| SampleSet::new("prop", "", samples).expect("valid by construction"))
}

proptest! {
    #[test]
    fn jsonl_round_trip_is_byte_identical(set in set_strategy(12)) {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("set.jsonl");
        set.write_jsonl(&path).unwrap();
        let loaded = load_dataset(&path, DatasetFormat::KreJsonl).unwrap();
        prop_assert_eq!(loaded.to_jsonl(), set.to_jsonl());
    }

    #[test]
    fn corpus_stats_total_equals_len(set in set_strategy(16)) {
        let stats = corpus_stats(&set);
        prop_assert_eq!(stats.total, set.len());
        prop_assert_eq!(stats.counts.values().sum::<usize>(), set.len());
    }

    #[test]
    fn parser_is_total_and_normalization_stable(raw in ".{0,200}", n_options in 2usize..=5) {
        let mut options = BTreeMap::new();
        for k in 0..n_options {
            options.insert(OptionLetter::from_index(k).unwrap(), format!("choice {k}"));
        }
        let sample = ConflictSample {
            id: "t".into(),
            corpus: Corpus::Ecqa,
            task_kind: TaskKind::Cr,
            question: "q".into(),
            options,
            golden: OptionLetter::from_index(0).unwrap(),
            negative: OptionLetter::from_index(1).unwrap(),
            positive_context: "p".into(),
            negative_context: "n".into(),
            answerable: true,
        };
        let parsed = parse_choice(&raw, &sample);
        // Choice letters always come from the sample's own options.
        if let Verdict::Choice(l) = parsed.verdict {
            prop_assert!(sample.options.contains_key(&l));
        }
        prop_assert_eq!(parse_choice(&normalize(&raw), &sample), parsed);
    }

    #[test]
    fn rule_one_is_stable_under_benign_suffixes(
        suffix in "[ a-z.,!0-9]{0,80}",
    ) {
        prop_assume!(!suffix.to_lowercase().contains("answer"));
        let mut options = BTreeMap::new();
        for k in 0..4 {
            options.insert(OptionLetter::from_index(k).unwrap(), format!("choice {k}"));
        }
        let sample = ConflictSample {
            id: "t".into(),
            corpus: Corpus::Ecqa,
            task_kind: TaskKind::Cr,
            question: "q".into(),
            options,
            golden: OptionLetter::from_index(0).unwrap(),
            negative: OptionLetter::from_index(1).unwrap(),
            positive_context: "p".into(),
            negative_context: "n".into(),
            answerable: true,
        };
        let base = "The answer is B.";
        let with_suffix = format!("{base}{suffix}");
        let a = parse_choice(base, &sample);
        let b = parse_choice(&with_suffix, &sample);
        prop_assert_eq!(a.verdict, b.verdict);
    }

    #[test]
    fn outcome_buckets_partition_everything(verdicts in prop::collection::vec(0usize..6, 0..50)) {
        let mut options = BTreeMap::new();
        for k in 0..4 {
            options.insert(OptionLetter::from_index(k).unwrap(), format!("choice {k}"));
        }
        let sample = ConflictSample {
            id: "t".into(),
            corpus: Corpus::Ecqa,
            task_kind: TaskKind::Cr,
            question: "q".into(),
            options,
            golden: OptionLetter::from_index(0).unwrap(),
            negative: OptionLetter::from_index(1).unwrap(),
            positive_context: "p".into(),
            negative_context: "n".into(),
            answerable: true,
        };
        let responses: Vec<String> = verdicts
            .iter()
            .map(|v| match v {
                0 => "The answer is A.".to_string(),
                1 => "The answer is B.".to_string(),
                2 => "The answer is C.".to_string(),
                3 => "The answer is D.".to_string(),
                4 => "None".to_string(),
                _ => "???".to_string(),
            })
            .collect();
        let parsed: Vec<_> = responses.iter().map(|r| parse_choice(r, &sample)).collect();
        let counts = count_outcomes(parsed.iter().map(|p| (p, &sample)));
        prop_assert_eq!(counts.total(), verdicts.len());
    }

    #[test]
    fn negative_selection_never_picks_the_golden_text(
        distractors in prop::collection::vec("[a-z]{1,8}", 1..4),
        seed in any::<u64>(),
    ) {
        prop_assume!(distractors.iter().all(|d| d != "golden"));
        let sel = select_negative_answer(&distractors, "golden", seed).unwrap();
        prop_assert_ne!(sel.negative_text.as_str(), "golden");
        prop_assert_ne!(sel.golden, sel.negative);
        prop_assert_eq!(sel.options.len(), distractors.len() + 1);
        prop_assert_eq!(sel.options[&sel.golden].as_str(), "golden");
    }

    #[test]
    fn substitution_removes_golden_and_inserts_negative(
        golden in "[A-Z]{3,8}",
        negative in "[a-z]{3,8}",
        filler in prop::collection::vec("[0-9]{1,6}", 1..6),
        hits in 1usize..4,
    ) {
        prop_assume!(!negative.to_lowercase().contains(&golden.to_lowercase()));
        let mut words: Vec<String> = filler;
        for _ in 0..hits {
            words.push(golden.clone());
        }
        let context = words.join(" ");
        let out = substitute_entity(&context, &golden, &negative).unwrap();
        prop_assert!(!out.to_lowercase().contains(&golden.to_lowercase()), "{}", out);
        prop_assert!(out.to_lowercase().contains(&negative.to_lowercase()), "{}", out);
    }
}
