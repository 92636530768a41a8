//! Instruction pool: the prompt instructions models are evaluated under.
//!
//! The bundled pool ships 48 instructions: for each setting (zero-shot,
//! few-shot) there are 12 without a hint and 12 with a hint that the context
//! may be misleading. Few-shot instruction texts embed the example slots
//! `[example1]`, `[example2]`, `[example3]` (or a single `{examples}` block);
//! zero-shot texts must not contain example slots. Instructions may also use
//! `{context}`, `{question}`, and `{options}` to place those parts inline;
//! without them the assembler appends the standard blocks.
//!
//! The bundled pool file is a versioned fixture; its bytes are pinned by a
//! checksum test.

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{generation::paraphrase_prompt, BuilderError, GenerationBackend};

/// Raw bytes of the bundled instruction pool fixture.
pub const BUNDLED_POOL_JSONL: &str = include_str!("../../fixtures/instruction_pool.jsonl");

/// Default instruction for the no-context memory-assessment pass.
pub const MEMORY_ASSESSMENT_TEXT: &str =
    "You are a good assistant, help me answer the following question.";

pub const EXAMPLE_SLOTS: [&str; 3] = ["[example1]", "[example2]", "[example3]"];
pub const EXAMPLES_BLOCK_SLOT: &str = "{examples}";

/// Prompting setting an instruction belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Setting {
    ZeroShot,
    FewShot,
}

impl fmt::Display for Setting {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Setting::ZeroShot => "zero_shot",
            Setting::FewShot => "few_shot",
        })
    }
}

/// Where an instruction came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Origin {
    HumanDraft,
    Paraphrase,
}

/// One prompt-pool entry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Instruction {
    pub id: String,
    pub text: String,
    /// Whether the text warns that the context may be misleading.
    pub hint: bool,
    pub setting: Setting,
    pub origin: Origin,
}

impl Instruction {
    /// The memory-assessment default instruction.
    pub fn memory_assessment() -> Self {
        Instruction {
            id: "memory-default".to_string(),
            text: MEMORY_ASSESSMENT_TEXT.to_string(),
            hint: false,
            setting: Setting::ZeroShot,
            origin: Origin::HumanDraft,
        }
    }

    pub fn has_numbered_example_slots(&self) -> bool {
        EXAMPLE_SLOTS.iter().all(|s| self.text.contains(s))
    }

    pub fn has_examples_block_slot(&self) -> bool {
        self.text.contains(EXAMPLES_BLOCK_SLOT)
    }

    pub fn has_example_slots(&self) -> bool {
        self.has_numbered_example_slots() || self.has_examples_block_slot()
    }

    /// Placeholder rules for the instruction's setting.
    pub fn validate(&self) -> Result<(), BuilderError> {
        if self.id.trim().is_empty() {
            return Err(BuilderError::InvalidInstruction {
                id: self.id.clone(),
                reason: "empty id".to_string(),
            });
        }
        if self.text.trim().is_empty() {
            return Err(BuilderError::InvalidInstruction {
                id: self.id.clone(),
                reason: "empty text".to_string(),
            });
        }
        let any_slot = self.has_examples_block_slot()
            || EXAMPLE_SLOTS.iter().any(|s| self.text.contains(s));
        match self.setting {
            Setting::ZeroShot if any_slot => Err(BuilderError::InvalidInstruction {
                id: self.id.clone(),
                reason: "zero-shot instruction must not contain example slots".to_string(),
            }),
            Setting::FewShot
                if any_slot
                    && !self.has_examples_block_slot()
                    && !self.has_numbered_example_slots() =>
            {
                Err(BuilderError::InvalidInstruction {
                    id: self.id.clone(),
                    reason: "few-shot instruction must carry all three example slots".to_string(),
                })
            }
            _ => Ok(()),
        }
    }
}

/// A loaded, validated instruction pool.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct InstructionPool {
    entries: Vec<Instruction>,
}

impl InstructionPool {
    pub fn new(entries: Vec<Instruction>) -> Result<Self, BuilderError> {
        let mut seen = std::collections::HashSet::new();
        for e in &entries {
            e.validate()?;
            if !seen.insert(e.id.clone()) {
                return Err(BuilderError::DuplicateId(e.id.clone()));
            }
        }
        Ok(InstructionPool { entries })
    }

    /// The bundled 48-instruction pool.
    pub fn bundled() -> Self {
        Self::from_jsonl_str(BUNDLED_POOL_JSONL).expect("bundled pool is valid")
    }

    pub fn from_jsonl_str(text: &str) -> Result<Self, BuilderError> {
        let mut entries = Vec::new();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let inst: Instruction =
                serde_json::from_str(line).map_err(|e| BuilderError::InvalidInstruction {
                    id: format!("line {}", i + 1),
                    reason: e.to_string(),
                })?;
            entries.push(inst);
        }
        Self::new(entries)
    }

    pub fn load(path: &Path) -> Result<Self, BuilderError> {
        let text = std::fs::read_to_string(path)?;
        Self::from_jsonl_str(&text)
    }

    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for e in &self.entries {
            out.push_str(&serde_json::to_string(e).expect("instruction serializes"));
            out.push('\n');
        }
        out
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Instruction> {
        self.entries.iter()
    }

    pub fn get(&self, id: &str) -> Option<&Instruction> {
        self.entries.iter().find(|e| e.id == id)
    }

    /// All instructions in one (setting, hint) group, in pool order.
    pub fn group(&self, setting: Setting, hint: bool) -> Vec<&Instruction> {
        self.entries
            .iter()
            .filter(|e| e.setting == setting && e.hint == hint)
            .collect()
    }
}

fn normalized_text(text: &str) -> String {
    text.split_whitespace().collect::<Vec<_>>().join(" ").to_lowercase()
}

/// Grow a draft pool by paraphrasing each draft once, deduplicating on
/// normalized text. With no backend the pool is the drafts.
pub fn assemble_instruction_pool(
    drafts: Vec<Instruction>,
    paraphrase_backend: Option<&dyn GenerationBackend>,
) -> Result<InstructionPool, BuilderError> {
    if drafts.is_empty() {
        return Err(BuilderError::InvalidInstruction {
            id: String::new(),
            reason: "draft list is empty".to_string(),
        });
    }
    let mut entries: Vec<Instruction> = Vec::new();
    let mut seen_text = std::collections::HashSet::new();
    let mut push_unique = |inst: Instruction, entries: &mut Vec<Instruction>| {
        if seen_text.insert(normalized_text(&inst.text)) {
            entries.push(inst);
        }
    };
    for draft in &drafts {
        draft.validate()?;
        push_unique(draft.clone(), &mut entries);
    }
    if let Some(backend) = paraphrase_backend {
        for draft in &drafts {
            let text = backend.generate(&paraphrase_prompt(&draft.text))?;
            let paraphrase = Instruction {
                id: format!("{}-p", draft.id),
                text,
                hint: draft.hint,
                setting: draft.setting,
                origin: Origin::Paraphrase,
            };
            paraphrase.validate()?;
            push_unique(paraphrase, &mut entries);
        }
    }
    InstructionPool::new(entries)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::builder::generation::{ScriptedGeneration, TemplateBackend};

    #[test]
    fn bundled_pool_has_twelve_per_group() {
        let pool = InstructionPool::bundled();
        assert_eq!(pool.len(), 48);
        for setting in [Setting::ZeroShot, Setting::FewShot] {
            for hint in [false, true] {
                assert_eq!(pool.group(setting, hint).len(), 12, "{setting} hint={hint}");
            }
        }
    }

    #[test]
    fn bundled_few_shot_entries_carry_example_slots() {
        let pool = InstructionPool::bundled();
        for inst in pool.iter() {
            match inst.setting {
                Setting::FewShot => assert!(
                    inst.has_example_slots(),
                    "{} lacks example slots",
                    inst.id
                ),
                Setting::ZeroShot => assert!(
                    !inst.has_example_slots(),
                    "{} has example slots",
                    inst.id
                ),
            }
        }
    }

    #[test]
    fn bundled_pool_is_bit_stable() {
        use sha2::{Digest, Sha256};
        let digest = Sha256::digest(BUNDLED_POOL_JSONL.as_bytes());
        let hex: String = digest.iter().map(|b| format!("{b:02x}")).collect();
        // Frozen checksum of the versioned fixture.
        assert_eq!(
            hex,
            include_str!("../../fixtures/instruction_pool.sha256").trim()
        );
    }

    #[test]
    fn pool_loading_is_idempotent() {
        let pool = InstructionPool::bundled();
        let reloaded = InstructionPool::from_jsonl_str(&pool.to_jsonl()).unwrap();
        assert_eq!(pool, reloaded);
    }

    fn draft(id: &str, text: &str) -> Instruction {
        Instruction {
            id: id.into(),
            text: text.into(),
            hint: false,
            setting: Setting::ZeroShot,
            origin: Origin::HumanDraft,
        }
    }

    #[test]
    fn no_backend_pool_equals_drafts() {
        let drafts = vec![draft("a", "Answer the question."), draft("b", "Pick one option.")];
        let pool = assemble_instruction_pool(drafts.clone(), None).unwrap();
        assert_eq!(pool.len(), 2);
        assert_eq!(pool.get("a").unwrap().text, drafts[0].text);
    }

    #[test]
    fn exact_duplicate_paraphrase_is_deduplicated() {
        // The template backend echoes the instruction, producing duplicates.
        let drafts = vec![draft("a", "Answer the question.")];
        let pool = assemble_instruction_pool(drafts, Some(&TemplateBackend)).unwrap();
        assert_eq!(pool.len(), 1);
    }

    #[test]
    fn fresh_paraphrases_are_added() {
        let backend = ScriptedGeneration::new(["Respond with exactly one option."]);
        let drafts = vec![draft("a", "Answer the question.")];
        let pool = assemble_instruction_pool(drafts, Some(&backend)).unwrap();
        assert_eq!(pool.len(), 2);
        let p = pool.get("a-p").unwrap();
        assert_eq!(p.origin, Origin::Paraphrase);
    }

    #[test]
    fn duplicate_draft_ids_rejected() {
        let drafts = vec![draft("a", "one."), draft("a", "two.")];
        let err = assemble_instruction_pool(drafts, None).unwrap_err();
        assert!(matches!(err, BuilderError::DuplicateId(_)));
    }

    #[test]
    fn zero_shot_with_example_slot_is_invalid() {
        let mut bad = draft("z", "Use these: [example1], [example2], [example3]");
        bad.setting = Setting::ZeroShot;
        assert!(bad.validate().is_err());
    }
}
