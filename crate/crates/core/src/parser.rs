//! Free-text model output to a parsed option decision.
//!
//! Models answer in many shapes ("The answer is D: happiness.", "Answer: A:
//! Anderson Tapes.", a bare "B", "None", full prose). [`parse_choice`] turns
//! any completion into a [`ParsedAnswer`]: either a choice among the sample's
//! option letters or `Invalid`. It is a total function with a fixed rule
//! precedence; results carry the rule that fired so runs can be audited.
//!
//! Rule precedence (first rule that fires wins):
//!
//! 1. `answer is X` / `answer is: X` clauses with `X` a valid letter followed
//!    by a boundary (colon, period, whitespace, or end). When several clauses
//!    name different letters, the last one wins: models often self-correct
//!    and the final clause is the committed answer.
//! 2. A leading `Answer: X`, a leading bare letter (`D: Economic
//!    deregulation.`), or a line consisting of just a letter. A leading
//!    letter without the `Answer:` prefix must be followed by colon, period,
//!    or end of line, so a sentence-initial article ("A fox ...") never
//!    counts as a choice.
//! 3. Unique case-insensitive containment of one option's text. If two or
//!    more option texts occur the response is ambiguous and is never
//!    credited.
//! 4. A whole-response refusal token from the configured lexicon (defaults:
//!    "none", "i don't know", "cannot determine").
//! 5. Otherwise unparseable.
//!
//! Parsing operates on whitespace-normalized text, so
//! `parse_choice(raw) == parse_choice(normalize(raw))` holds by construction.

use std::sync::LazyLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::sample::{ConflictSample, OptionLetter};

/// Version label embedded in run artifacts; bump when the rules change.
pub const PARSER_VERSION: &str = "1.0.0";

/// Default whole-response refusal tokens (lowercase).
pub const DEFAULT_NONE_LEXICON: [&str; 3] = ["none", "i don't know", "cannot determine"];

/// The parsed decision.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Verdict {
    Choice(OptionLetter),
    Invalid,
}

impl Verdict {
    pub fn letter(&self) -> Option<OptionLetter> {
        match self {
            Verdict::Choice(l) => Some(*l),
            Verdict::Invalid => None,
        }
    }
}

/// Which precedence rule produced the verdict.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MatchRule {
    /// Rule 2: leading `Answer: X` / leading letter / bare letter line.
    ExplicitLetter,
    /// Rule 1: an `answer is X` clause.
    AnswerIsPattern,
    /// Rule 3: unique option-text containment.
    OptionTextMatch,
    /// Rule 4: refusal token.
    NoneToken,
    /// Rule 5: nothing matched.
    Unparseable,
}

/// A parsed response: verdict, the rule that fired, and the matched span
/// (character offsets into the normalized response text).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParsedAnswer {
    pub verdict: Verdict,
    pub match_rule: MatchRule,
    pub span: Option<(usize, usize)>,
}

impl ParsedAnswer {
    fn invalid(rule: MatchRule, span: Option<(usize, usize)>) -> Self {
        ParsedAnswer {
            verdict: Verdict::Invalid,
            match_rule: rule,
            span,
        }
    }
}

/// Collapse horizontal whitespace, trim line ends, drop blank lines.
/// Idempotent; the substrate all rules run against.
pub fn normalize(raw: &str) -> String {
    let mut lines = Vec::new();
    for line in raw.replace('\r', "\n").lines() {
        let collapsed = line.split_whitespace().collect::<Vec<_>>().join(" ");
        if !collapsed.is_empty() {
            lines.push(collapsed);
        }
    }
    lines.join("\n")
}

static ANSWER_IS: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"(?i)answer\s+is\s*:?\s*([A-Ea-e])").expect("static regex"));

static LEADING_ANSWER: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"(?i)^answer\s*:?\s*([A-Ea-e])").expect("static regex"));

fn is_boundary(c: Option<char>) -> bool {
    match c {
        None => true,
        Some(c) => c == ':' || c == '.' || c.is_whitespace(),
    }
}

fn char_index(text: &str, byte_pos: usize) -> usize {
    text[..byte_pos].chars().count()
}

/// Parse a raw completion against one sample. Total: never fails.
pub fn parse_choice(raw: &str, sample: &ConflictSample) -> ParsedAnswer {
    parse_choice_with(raw, sample, &DEFAULT_NONE_LEXICON.map(str::to_string))
}

/// [`parse_choice`] with a caller-supplied refusal lexicon (lowercase entries).
pub fn parse_choice_with(
    raw: &str,
    sample: &ConflictSample,
    none_lexicon: &[String],
) -> ParsedAnswer {
    let text = normalize(raw);
    if text.is_empty() {
        return ParsedAnswer::invalid(MatchRule::Unparseable, None);
    }
    let valid = |c: char| OptionLetter::new(c.to_ascii_uppercase()).filter(|l| sample.options.contains_key(l));

    // Rule 1: last valid `answer is X` clause wins.
    let mut last: Option<(OptionLetter, (usize, usize))> = None;
    for caps in ANSWER_IS.captures_iter(&text) {
        let m = caps.get(1).expect("capture 1");
        let c = m.as_str().chars().next().expect("one char");
        let after = text[m.end()..].chars().next();
        if let Some(letter) = valid(c) {
            if is_boundary(after) {
                let whole = caps.get(0).expect("whole match");
                last = Some((letter, (char_index(&text, whole.start()), char_index(&text, m.end()))));
            }
        }
    }
    if let Some((letter, span)) = last {
        return ParsedAnswer {
            verdict: Verdict::Choice(letter),
            match_rule: MatchRule::AnswerIsPattern,
            span: Some(span),
        };
    }

    // Rule 2a: leading `Answer: X` with any boundary after the letter.
    if let Some(caps) = LEADING_ANSWER.captures(&text) {
        let m = caps.get(1).expect("capture 1");
        let c = m.as_str().chars().next().expect("one char");
        let after = text[m.end()..].chars().next();
        if let Some(letter) = valid(c) {
            if is_boundary(after) {
                return ParsedAnswer {
                    verdict: Verdict::Choice(letter),
                    match_rule: MatchRule::ExplicitLetter,
                    span: Some((0, char_index(&text, m.end()))),
                };
            }
        }
    }

    // Rule 2b: leading bare letter; ':', '.', or line end only, so a
    // sentence-initial article never parses as a choice.
    let mut chars = text.chars();
    if let (Some(first), next) = (chars.next(), chars.next()) {
        if let Some(letter) = valid(first) {
            if matches!(next, None | Some(':') | Some('.') | Some('\n')) {
                return ParsedAnswer {
                    verdict: Verdict::Choice(letter),
                    match_rule: MatchRule::ExplicitLetter,
                    span: Some((0, 1)),
                };
            }
        }
    }

    // Rule 2c: first line that is exactly a letter (optionally `X.` / `X:`).
    let mut offset = 0usize;
    for line in text.split('\n') {
        let trimmed = line.strip_suffix('.').or_else(|| line.strip_suffix(':')).unwrap_or(line);
        let mut cs = trimmed.chars();
        if let (Some(c), None) = (cs.next(), cs.next()) {
            if let Some(letter) = valid(c) {
                return ParsedAnswer {
                    verdict: Verdict::Choice(letter),
                    match_rule: MatchRule::ExplicitLetter,
                    span: Some((offset, offset + 1)),
                };
            }
        }
        offset += line.chars().count() + 1;
    }

    // Rule 3: unique option-text containment.
    let lower = text.to_lowercase();
    let mut hits: Vec<(OptionLetter, usize, usize)> = Vec::new();
    for (letter, option_text) in &sample.options {
        let needle = normalize(option_text).to_lowercase();
        if needle.is_empty() {
            continue;
        }
        if let Some(pos) = lower.find(&needle) {
            hits.push((
                *letter,
                char_index(&lower, pos),
                char_index(&lower, pos + needle.len()),
            ));
        }
    }
    match hits.as_slice() {
        [(letter, start, end)] => {
            return ParsedAnswer {
                verdict: Verdict::Choice(*letter),
                match_rule: MatchRule::OptionTextMatch,
                span: Some((*start, *end)),
            };
        }
        [] => {}
        _ => {
            // Two or more option texts present: ambiguous, never credited.
            return ParsedAnswer::invalid(MatchRule::Unparseable, None);
        }
    }

    // Rule 4: whole-response refusal token.
    let stripped = text
        .trim()
        .trim_matches(|c: char| c == '"' || c == '\'')
        .trim_end_matches(['.', '!'])
        .to_lowercase();
    if none_lexicon.iter().any(|entry| stripped == *entry) {
        return ParsedAnswer::invalid(MatchRule::NoneToken, Some((0, text.chars().count())));
    }

    ParsedAnswer::invalid(MatchRule::Unparseable, None)
}

/// Bucket counts over parsed outcomes: golden picks, negative (misleading)
/// picks, other letters, and invalid responses. The four buckets are
/// mutually exclusive and exhaustive.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct OutcomeCounts {
    pub golden: usize,
    pub negative: usize,
    pub other: usize,
    pub invalid: usize,
}

impl OutcomeCounts {
    pub fn total(&self) -> usize {
        self.golden + self.negative + self.other + self.invalid
    }
}

/// Count outcome buckets for (parsed answer, sample) pairs.
pub fn count_outcomes<'a, I>(outcomes: I) -> OutcomeCounts
where
    I: IntoIterator<Item = (&'a ParsedAnswer, &'a ConflictSample)>,
{
    let mut counts = OutcomeCounts::default();
    for (parsed, sample) in outcomes {
        match parsed.verdict {
            Verdict::Choice(l) if l == sample.golden => counts.golden += 1,
            Verdict::Choice(l) if l == sample.negative => counts.negative += 1,
            Verdict::Choice(_) => counts.other += 1,
            Verdict::Invalid => counts.invalid += 1,
        }
    }
    counts
}
