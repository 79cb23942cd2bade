//! Metrics reports, PR curves and block dumps.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use hgl_core::blocking::Block;
use hgl_core::evaluation::{AtRecall, PrCurve, SpanScores};
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TypeMetrics {
    pub instances: usize,
    pub positives: usize,
    pub auc: f64,
    /// Keyed by recall level; `null` when the level is unreachable.
    pub precision_at_recall: BTreeMap<String, Option<f64>>,
    pub token_precision_at_recall: BTreeMap<String, Option<f64>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpanMetrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub true_positives: usize,
    pub predicted: usize,
    pub gold: usize,
}

impl From<SpanScores> for SpanMetrics {
    fn from(s: SpanScores) -> Self {
        SpanMetrics {
            precision: s.precision,
            recall: s.recall,
            f1: s.f1,
            true_positives: s.true_positives,
            predicted: s.predicted,
            gold: s.gold,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub types: BTreeMap<String, TypeMetrics>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub span: Option<SpanMetrics>,
}

pub fn levels_map(at: &[AtRecall]) -> BTreeMap<String, Option<f64>> {
    at.iter()
        .map(|a| {
            let level = match a {
                AtRecall::Reached { level, .. } | AtRecall::Unreachable { level, .. } => *level,
            };
            (format!("{level:.2}"), a.precision())
        })
        .collect()
}

pub fn write_report(report: &MetricsReport) -> String {
    let mut s = serde_json::to_string_pretty(report).expect("report serialises");
    s.push('\n');
    s
}

pub fn parse_report(text: &str) -> Result<MetricsReport, String> {
    serde_json::from_str(text).map_err(|e| e.to_string())
}

pub fn write_pr_csv(curve: &PrCurve) -> String {
    let mut out = String::from("rank,recall,precision\n");
    for p in &curve.points {
        writeln!(out, "{},{},{}", p.rank, p.recall, p.precision).expect("writing to a string");
    }
    out
}

pub const BLOCK_HEADER: &str = "type\trank\tscore\tadmitted\toccurrences\tphrase";

/// Every ranked candidate of each block, admitted ones first.
pub fn write_blocks<'a>(blocks: impl IntoIterator<Item = &'a Block>) -> String {
    let mut out = format!("{BLOCK_HEADER}\n");
    for b in blocks {
        for (r, c) in b.ranked.iter().enumerate() {
            writeln!(
                out,
                "{}\t{}\t{}\t{}\t{}\t{}",
                b.entity_type,
                r + 1,
                c.score,
                u8::from(r < b.admitted),
                c.occurrences.len(),
                c.tokens.join(" ")
            )
            .expect("writing to a string");
        }
    }
    out
}
