//! Leaderboard construction and report emission.
//!
//! Rows carry both unrounded scores and the displayed integer percents
//! (rounded half away from zero; the displayed FR can differ from the
//! re-derived mean by at most one point). Ranks: `fr_rank` by descending FR,
//! `adapt_rank` by descending adaptivity, and the overall rank by ascending
//! mean of the two, ties broken by FR then model name. All emitters are
//! byte-stable for a given table.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::engine::{classify_style, Style, StyleThresholds};

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("empty leaderboard")]
    Empty,
}

/// Round a fraction to an integer percent, halves away from zero.
pub fn display_percent(fraction: f64) -> i64 {
    (fraction * 100.0).round() as i64
}

/// Per-model aggregate fed into the leaderboard. Scores are fractions in
/// [0, 1]; `fr` may carry an externally reported value, otherwise it is
/// derived as (VR + RR) / 2. A missing style label is classified from the
/// style score and FR.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LeaderboardInput {
    pub model: String,
    pub vr: f64,
    pub rr: f64,
    #[serde(default)]
    pub fr: Option<f64>,
    #[serde(default)]
    pub fr_upper: Option<f64>,
    pub dmss: f64,
    #[serde(default)]
    pub style: Option<Style>,
    pub adaptivity: f64,
    #[serde(default)]
    pub misleading_count: Option<usize>,
    #[serde(default)]
    pub invalid_count: Option<usize>,
}

/// One ranked leaderboard row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LeaderboardRow {
    pub model: String,
    pub vr: f64,
    pub rr: f64,
    pub fr: f64,
    pub fr_upper: Option<f64>,
    pub vr_display: i64,
    pub rr_display: i64,
    pub fr_display: i64,
    pub fr_upper_display: Option<i64>,
    pub fr_rank: usize,
    pub dmss: f64,
    pub style: Style,
    pub adaptivity: f64,
    pub adapt_rank: usize,
    pub overall_rank: usize,
    pub misleading_count: Option<usize>,
    pub invalid_count: Option<usize>,
}

/// Build the ranked table; rows come back in overall-rank order. The result
/// is a pure function of the row set, independent of input order.
pub fn build_leaderboard(
    inputs: &[LeaderboardInput],
    thresholds: &StyleThresholds,
) -> Result<Vec<LeaderboardRow>, ReportError> {
    if inputs.is_empty() {
        return Err(ReportError::Empty);
    }
    let n = inputs.len();
    let mut rows: Vec<LeaderboardRow> = inputs
        .iter()
        .map(|input| {
            let fr = input.fr.unwrap_or((input.vr + input.rr) / 2.0);
            let style = input
                .style
                .unwrap_or_else(|| classify_style(input.dmss, Some(fr), thresholds));
            LeaderboardRow {
                model: input.model.clone(),
                vr: input.vr,
                rr: input.rr,
                fr,
                fr_upper: input.fr_upper,
                vr_display: display_percent(input.vr),
                rr_display: display_percent(input.rr),
                fr_display: display_percent(fr),
                fr_upper_display: input.fr_upper.map(display_percent),
                fr_rank: 0,
                dmss: input.dmss,
                style,
                adaptivity: input.adaptivity,
                adapt_rank: 0,
                overall_rank: 0,
                misleading_count: input.misleading_count,
                invalid_count: input.invalid_count,
            }
        })
        .collect();

    let mut by_fr: Vec<usize> = (0..n).collect();
    by_fr.sort_by(|&a, &b| {
        rows[b]
            .fr
            .partial_cmp(&rows[a].fr)
            .expect("finite fr")
            .then_with(|| rows[a].model.cmp(&rows[b].model))
    });
    for (rank, idx) in by_fr.into_iter().enumerate() {
        rows[idx].fr_rank = rank + 1;
    }
    let mut by_adapt: Vec<usize> = (0..n).collect();
    by_adapt.sort_by(|&a, &b| {
        rows[b]
            .adaptivity
            .partial_cmp(&rows[a].adaptivity)
            .expect("finite adaptivity")
            .then_with(|| rows[a].model.cmp(&rows[b].model))
    });
    for (rank, idx) in by_adapt.into_iter().enumerate() {
        rows[idx].adapt_rank = rank + 1;
    }
    let mut by_overall: Vec<usize> = (0..n).collect();
    by_overall.sort_by(|&a, &b| {
        let mean_a = (rows[a].fr_rank + rows[a].adapt_rank) as f64 / 2.0;
        let mean_b = (rows[b].fr_rank + rows[b].adapt_rank) as f64 / 2.0;
        mean_a
            .partial_cmp(&mean_b)
            .expect("finite rank mean")
            .then_with(|| rows[b].fr.partial_cmp(&rows[a].fr).expect("finite fr"))
            .then_with(|| rows[a].model.cmp(&rows[b].model))
    });
    let mut ordered = Vec::with_capacity(n);
    for (rank, idx) in by_overall.iter().enumerate() {
        rows[*idx].overall_rank = rank + 1;
        ordered.push(*idx);
    }
    let mut out: Vec<LeaderboardRow> = Vec::with_capacity(n);
    for idx in ordered {
        out.push(rows[idx].clone());
    }
    Ok(out)
}

/// Metadata stamped into every emitted report.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ReportMeta {
    pub config_hash: String,
    pub seed: u64,
    pub parser_version: String,
    /// Instruction ids used per model.
    pub instructions: BTreeMap<String, String>,
}

fn trim_decimal(value: f64) -> String {
    let s = format!("{value:.2}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s.is_empty() || s == "-" {
        "0".to_string()
    } else {
        s.to_string()
    }
}

/// Markdown table mirroring the leaderboard column order, with a footer
/// documenting the overall-rank convention and the run metadata.
pub fn leaderboard_markdown(rows: &[LeaderboardRow], meta: &ReportMeta) -> String {
    let mut out = String::new();
    out.push_str("# Robustness Leaderboard\n\n");
    out.push_str("| Model | VR | RR | FR | FR_upper | FR_rank | DMSS | Style | Adapt | Adapt_rank | Over all |\n");
    out.push_str("|---|---|---|---|---|---|---|---|---|---|---|\n");
    for r in rows {
        out.push_str(&format!(
            "| {} | {} | {} | {} | {} | {} | {} | {} | {} | {} | {} |\n",
            r.model,
            r.vr_display,
            r.rr_display,
            r.fr_display,
            r.fr_upper_display
                .map(|v| v.to_string())
                .unwrap_or_else(|| "-".into()),
            r.fr_rank,
            (r.dmss * 100.0).round() as i64,
            r.style,
            trim_decimal(r.adaptivity),
            r.adapt_rank,
            r.overall_rank,
        ));
    }
    out.push('\n');
    out.push_str(
        "Over-all rank is the ascending mean of FR_rank and Adapt_rank (ties by FR, then \
         model name); DMSS is shown x100.\n",
    );
    out.push_str(&format!(
        "run: config={} seed={} parser={}\n",
        meta.config_hash, meta.seed, meta.parser_version
    ));
    out
}

/// CSV with displayed and unrounded columns; the displayed FR re-derives
/// from the unrounded column under the documented rounding rule. Metadata is
/// appended as a trailing `#`-prefixed line.
pub fn leaderboard_csv(rows: &[LeaderboardRow], meta: &ReportMeta) -> Result<String, ReportError> {
    let mut writer = csv::Writer::from_writer(Vec::new());
    writer.write_record([
        "model",
        "vr_display",
        "rr_display",
        "fr_display",
        "fr_upper_display",
        "vr_unrounded_pct",
        "rr_unrounded_pct",
        "fr_unrounded_pct",
        "fr_upper_unrounded_pct",
        "fr_rank",
        "dmss",
        "style",
        "adaptivity",
        "adapt_rank",
        "overall_rank",
        "misleading_count",
        "invalid_count",
    ])?;
    for r in rows {
        writer.write_record([
            r.model.clone(),
            r.vr_display.to_string(),
            r.rr_display.to_string(),
            r.fr_display.to_string(),
            r.fr_upper_display.map(|v| v.to_string()).unwrap_or_default(),
            format!("{:.4}", r.vr * 100.0),
            format!("{:.4}", r.rr * 100.0),
            format!("{:.4}", r.fr * 100.0),
            r.fr_upper
                .map(|v| format!("{:.4}", v * 100.0))
                .unwrap_or_default(),
            r.fr_rank.to_string(),
            format!("{:.4}", r.dmss),
            r.style.to_string(),
            format!("{:.4}", r.adaptivity),
            r.adapt_rank.to_string(),
            r.overall_rank.to_string(),
            r.misleading_count.map(|v| v.to_string()).unwrap_or_default(),
            r.invalid_count.map(|v| v.to_string()).unwrap_or_default(),
        ])?;
    }
    let bytes = writer
        .into_inner()
        .map_err(|e| std::io::Error::other(e.to_string()))?;
    let mut text = String::from_utf8(bytes).expect("csv is utf-8");
    text.push_str(&format!(
        "# config={} seed={} parser={}\n",
        meta.config_hash, meta.seed, meta.parser_version
    ));
    Ok(text)
}

/// Formats [`emit_report`] can write.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReportFormat {
    Csv,
    Markdown,
    Json,
}

#[derive(Debug, Serialize)]
struct JsonReport<'a> {
    meta: &'a ReportMeta,
    rows: &'a [LeaderboardRow],
}

/// Write the requested report files into `dir`; returns the paths written.
pub fn emit_report(
    rows: &[LeaderboardRow],
    formats: &[ReportFormat],
    dir: &Path,
    meta: &ReportMeta,
) -> Result<Vec<PathBuf>, ReportError> {
    let mut written = Vec::new();
    let mut formats: Vec<ReportFormat> = formats.to_vec();
    formats.sort();
    formats.dedup();
    for format in formats {
        let path = match format {
            ReportFormat::Csv => {
                let p = dir.join("leaderboard.csv");
                std::fs::write(&p, leaderboard_csv(rows, meta)?)?;
                p
            }
            ReportFormat::Markdown => {
                let p = dir.join("leaderboard.md");
                std::fs::write(&p, leaderboard_markdown(rows, meta))?;
                p
            }
            ReportFormat::Json => {
                let p = dir.join("report.json");
                let mut text =
                    serde_json::to_string_pretty(&JsonReport { meta, rows }).expect("serializes");
                text.push('\n');
                std::fs::write(&p, text)?;
                p
            }
        };
        written.push(path);
    }
    Ok(written)
}
