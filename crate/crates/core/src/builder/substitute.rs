//! Entity substitution for negative-context construction.
//!
//! Every occurrence of the golden answer in the golden context is replaced by
//! the negative answer. Besides the exact string, a small set of derived
//! variants is substituted:
//!
//! - case variants (matching is ASCII case-insensitive; replacements adapt
//!   leading capitalization and all-caps spans)
//! - a leading article stripped from both sides ("the X" golden with a bare
//!   "X" occurrence)
//! - coordinated spans: when golden and negative both have the shape
//!   `<a> and <b> <noun-plural>` with the same noun ("10th and 11th
//!   centuries" -> "8th and 9th centuries"), the singular component forms are
//!   substituted too ("10th century" -> "8th century"), since source passages
//!   routinely re-mention one member of the pair.
//!
//! Longer patterns win over shorter ones at the same position; scanning is a
//! single left-to-right pass over non-overlapping matches.

use super::BuilderError;

/// Replace the golden answer (and derived variants) with the negative answer.
/// Fails with `SubstitutionMiss` when nothing matched.
pub fn substitute_entity(
    context: &str,
    golden_answer: &str,
    negative_answer: &str,
) -> Result<String, BuilderError> {
    let golden = golden_answer.trim();
    let negative = negative_answer.trim();
    if golden.is_empty() {
        return Err(BuilderError::SubstitutionMiss {
            needle: golden_answer.to_string(),
        });
    }
    let mut pairs = variant_pairs(golden, negative);
    pairs.sort_by(|a, b| b.0.len().cmp(&a.0.len()));

    let mut out = String::with_capacity(context.len());
    let mut hits = 0usize;
    let mut i = 0usize;
    while i < context.len() {
        let mut matched = false;
        for (pattern, replacement) in &pairs {
            if let Some(slice) = context.get(i..i + pattern.len()) {
                if slice.eq_ignore_ascii_case(pattern) {
                    out.push_str(&adapt_case(slice, replacement));
                    i += pattern.len();
                    hits += 1;
                    matched = true;
                    break;
                }
            }
        }
        if !matched {
            let c = context[i..].chars().next().expect("in bounds");
            out.push(c);
            i += c.len_utf8();
        }
    }
    if hits == 0 {
        return Err(BuilderError::SubstitutionMiss {
            needle: golden.to_string(),
        });
    }
    Ok(out)
}

fn variant_pairs(golden: &str, negative: &str) -> Vec<(String, String)> {
    let mut pairs = vec![(golden.to_string(), negative.to_string())];
    if let (Some(g), Some(n)) = (strip_article(golden), strip_article(negative)) {
        pairs.push((g.to_string(), n.to_string()));
    } else if let Some(g) = strip_article(golden) {
        pairs.push((g.to_string(), negative.to_string()));
    }
    if let (Some((g1, g2, noun)), Some((n1, n2, noun2))) =
        (split_coordination(golden), split_coordination(negative))
    {
        if noun.eq_ignore_ascii_case(noun2) {
            if let Some(singular) = singularize(noun) {
                pairs.push((format!("{g1} {singular}"), format!("{n1} {singular}")));
                pairs.push((format!("{g2} {singular}"), format!("{n2} {singular}")));
            }
        }
    }
    pairs
}

fn strip_article(text: &str) -> Option<&str> {
    for article in ["the ", "a ", "an "] {
        if text.len() > article.len() && text[..article.len()].eq_ignore_ascii_case(article) {
            return Some(&text[article.len()..]);
        }
    }
    None
}

/// `"10th and 11th centuries"` -> `("10th", "11th", "centuries")`.
fn split_coordination(text: &str) -> Option<(&str, &str, &str)> {
    let words: Vec<&str> = text.split(' ').collect();
    match words.as_slice() {
        [a, and, b, noun] if *and == "and" && noun.chars().all(|c| c.is_ascii_alphabetic()) => {
            Some((a, b, noun))
        }
        _ => None,
    }
}

fn singularize(noun: &str) -> Option<String> {
    if let Some(stem) = noun.strip_suffix("ies") {
        return Some(format!("{stem}y"));
    }
    noun.strip_suffix('s')
        .filter(|stem| stem.len() >= 2)
        .map(str::to_string)
}

/// Carry the matched span's capitalization over to the replacement.
fn adapt_case(matched: &str, replacement: &str) -> String {
    if matched.chars().all(|c| !c.is_ascii_lowercase()) && matched.chars().any(|c| c.is_ascii_uppercase()) {
        return replacement.to_ascii_uppercase();
    }
    let starts_upper = matched.chars().next().is_some_and(|c| c.is_ascii_uppercase());
    let repl_starts_lower = replacement.chars().next().is_some_and(|c| c.is_ascii_lowercase());
    if starts_upper && repl_starts_lower {
        let mut chars = replacement.chars();
        let first = chars.next().expect("non-empty replacement");
        return first.to_ascii_uppercase().to_string() + chars.as_str();
    }
    replacement.to_string()
}
