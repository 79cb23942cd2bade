//! Ranking metrics, span-level F1 and export of the denoised dataset.
//!
//! The area under the precision-recall curve is average precision: the mean
//! of the precision values at the ranks of the gold positives, which is the
//! step-interpolated area.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec::Vec;

use crate::corpus::{Corpus, Instance, Mention, NoiseProfile, Span};

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum EvalError {
    #[error("no gold positives, the metric is undefined")]
    NoPositives,
    #[error("entry {0} has no gold flag")]
    MissingGold(usize),
    #[error("score of entry {0} is not finite")]
    NonFiniteScore(usize),
    #[error("{what} has {got} entries, expected {expected}")]
    LengthMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("no noise entry for type {0:?}")]
    MissingNoise(String),
}

#[derive(Clone, Debug, PartialEq)]
pub struct RankedEntry {
    /// Position in the scored input.
    pub index: usize,
    pub score: f64,
    pub gold: Option<bool>,
    /// Units this entry counts for, 1 per instance or its token count.
    pub weight: usize,
}

/// Entries sorted by score, highest first, ties by input index.
#[derive(Clone, Debug, PartialEq)]
pub struct RankedResult {
    pub entries: Vec<RankedEntry>,
    /// Positive weight absent from the ranking (for example mentions the
    /// dictionary never matched). It lowers recall but never precision.
    pub missed: usize,
}

impl RankedResult {
    pub fn new(scores: &[f64], gold: &[Option<bool>]) -> Result<Self, EvalError> {
        if gold.len() != scores.len() {
            return Err(EvalError::LengthMismatch {
                what: "gold",
                expected: scores.len(),
                got: gold.len(),
            });
        }
        if let Some(i) = scores.iter().position(|s| !s.is_finite()) {
            return Err(EvalError::NonFiniteScore(i));
        }
        let mut entries: Vec<RankedEntry> = scores
            .iter()
            .zip(gold)
            .enumerate()
            .map(|(index, (&score, &gold))| RankedEntry {
                index,
                score,
                gold,
                weight: 1,
            })
            .collect();
        entries.sort_by(|a, b| b.score.total_cmp(&a.score).then(a.index.cmp(&b.index)));
        Ok(RankedResult { entries, missed: 0 })
    }

    pub fn from_instances(instances: &[Instance], scores: &[f64]) -> Result<Self, EvalError> {
        let gold: Vec<Option<bool>> = instances.iter().map(|i| i.gold).collect();
        RankedResult::new(scores, &gold)
    }

    /// Replaces unit weights, indexed by input position.
    pub fn with_weights(mut self, weights: &[usize]) -> Result<Self, EvalError> {
        if weights.len() != self.entries.len() {
            return Err(EvalError::LengthMismatch {
                what: "weights",
                expected: self.entries.len(),
                got: weights.len(),
            });
        }
        for e in &mut self.entries {
            e.weight = weights[e.index];
        }
        Ok(self)
    }

    pub fn with_missed(mut self, missed: usize) -> Self {
        self.missed = missed;
        self
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Input indices in rank order.
    pub fn order(&self) -> impl Iterator<Item = usize> + '_ {
        self.entries.iter().map(|e| e.index)
    }

    fn flags(&self) -> Result<Vec<(bool, usize)>, EvalError> {
        self.entries
            .iter()
            .map(|e| e.gold.map(|g| (g, e.weight)).ok_or(EvalError::MissingGold(e.index)))
            .collect()
    }

    fn positive_weight(flags: &[(bool, usize)], missed: usize) -> Result<usize, EvalError> {
        let total = flags.iter().filter(|f| f.0).map(|f| f.1).sum::<usize>() + missed;
        if total == 0 {
            Err(EvalError::NoPositives)
        } else {
            Ok(total)
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PrPoint {
    /// 1-based length of the prefix.
    pub rank: usize,
    pub recall: f64,
    pub precision: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PrCurve {
    /// One point per prefix ending in a gold positive.
    pub points: Vec<PrPoint>,
    pub auc: f64,
}

/// Precision-recall curve and its area as (weighted) average precision.
pub fn pr_auc(ranked: &RankedResult) -> Result<PrCurve, EvalError> {
    let flags = ranked.flags()?;
    let total = RankedResult::positive_weight(&flags, ranked.missed)? as f64;
    let mut points = Vec::new();
    let (mut hit, mut seen) = (0usize, 0usize);
    let mut area = 0.0;
    for (k, &(gold, w)) in flags.iter().enumerate() {
        seen += w;
        if gold {
            hit += w;
            let precision = hit as f64 / seen as f64;
            area += w as f64 * precision;
            points.push(PrPoint {
                rank: k + 1,
                recall: hit as f64 / total,
                precision,
            });
        }
    }
    Ok(PrCurve {
        points,
        auc: area / total,
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum AtRecall {
    Reached {
        level: f64,
        /// Length of the shortest prefix reaching the level.
        prefix: usize,
        recall: f64,
        precision: f64,
    },
    Unreachable {
        level: f64,
        /// Recall of the full ranking.
        ceiling: f64,
    },
}

impl AtRecall {
    pub fn precision(&self) -> Option<f64> {
        match self {
            AtRecall::Reached { precision, .. } => Some(*precision),
            AtRecall::Unreachable { .. } => None,
        }
    }
}

pub const RECALL_LEVELS: [f64; 3] = [0.25, 0.50, 0.75];

/// Precision of the shortest prefix whose recall reaches each level.
///
/// Counts use entry weights, so token weights give the token-level variant.
pub fn precision_at_recall(ranked: &RankedResult, levels: &[f64]) -> Result<Vec<AtRecall>, EvalError> {
    let flags = ranked.flags()?;
    let total = RankedResult::positive_weight(&flags, ranked.missed)?;
    // (prefix length, positive weight, weight) after each entry.
    let mut prefixes = Vec::with_capacity(flags.len());
    let (mut hit, mut seen) = (0usize, 0usize);
    for (k, &(gold, w)) in flags.iter().enumerate() {
        seen += w;
        if gold {
            hit += w;
        }
        prefixes.push((k + 1, hit, seen));
    }
    Ok(levels
        .iter()
        .map(|&level| {
            // hit / total >= level, compared without division.
            let found = prefixes.iter().find(|p| p.1 as f64 >= level * total as f64 - 1e-12 * total as f64);
            match found {
                Some(&(prefix, hit, seen)) => AtRecall::Reached {
                    level,
                    prefix,
                    recall: hit as f64 / total as f64,
                    precision: if seen == 0 { 0.0 } else { hit as f64 / seen as f64 },
                },
                None => AtRecall::Unreachable {
                    level,
                    ceiling: prefixes.last().map_or(0, |p| p.1) as f64 / total as f64,
                },
            }
        })
        .collect())
}

/// A typed span addressed by document and sentence identifiers.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct LabeledSpan {
    pub doc_id: String,
    pub sent_id: String,
    pub span: Span,
    pub label: String,
}

/// Gold mentions of a corpus as labelled spans.
pub fn corpus_spans(corpus: &Corpus) -> BTreeSet<LabeledSpan> {
    corpus
        .gold_mentions()
        .map(|(i, m)| {
            let s = &corpus.sentences[i];
            LabeledSpan {
                doc_id: s.doc_id.clone(),
                sent_id: s.sent_id.clone(),
                span: m.span,
                label: m.label.clone(),
            }
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpanScores {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub true_positives: usize,
    pub predicted: usize,
    pub gold: usize,
}

/// Exact-match span precision, recall and micro-F1 over all types.
pub fn span_f1(predicted: &BTreeSet<LabeledSpan>, gold: &BTreeSet<LabeledSpan>) -> SpanScores {
    let tp = predicted.intersection(gold).count();
    let ratio = |a: usize, b: usize| if b == 0 { 0.0 } else { a as f64 / b as f64 };
    let precision = ratio(tp, predicted.len());
    let recall = ratio(tp, gold.len());
    let f1 = if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    };
    SpanScores {
        precision,
        recall,
        f1,
        true_positives: tp,
        predicted: predicted.len(),
        gold: gold.len(),
    }
}

/// A type's weakly labelled pool with its ranking.
#[derive(Clone, Copy, Debug)]
pub struct RankedPool<'a> {
    pub instances: &'a [Instance],
    pub ranked: &'a RankedResult,
}

/// Keeps the top `round(N * p)` instances of every type and writes them as
/// the gold annotation of a copy of `corpus`.
///
/// Kept spans of different types that overlap are resolved in favour of the
/// higher confidence, then the lexicographically smaller type.
pub fn export_denoised(
    corpus: &Corpus,
    pools: &BTreeMap<String, RankedPool<'_>>,
    profile: &NoiseProfile,
) -> Result<Corpus, EvalError> {
    struct Kept<'a> {
        score: f64,
        label: &'a str,
        sentence: usize,
        span: Span,
    }
    let mut kept = Vec::new();
    for (ty, pool) in pools {
        if pool.ranked.len() != pool.instances.len() {
            return Err(EvalError::LengthMismatch {
                what: "ranking",
                expected: pool.instances.len(),
                got: pool.ranked.len(),
            });
        }
        let entry = profile.get(ty).ok_or_else(|| EvalError::MissingNoise(ty.clone()))?;
        let keep = entry.accuracy.expected_correct(pool.instances.len());
        for e in pool.ranked.entries.iter().take(keep) {
            let inst = &pool.instances[e.index];
            kept.push(Kept {
                score: e.score,
                label: ty,
                sentence: inst.sentence,
                span: inst.span,
            });
        }
    }
    kept.sort_by(|a, b| {
        b.score
            .total_cmp(&a.score)
            .then_with(|| a.label.cmp(b.label))
            .then_with(|| (a.sentence, a.span).cmp(&(b.sentence, b.span)))
    });
    let mut per_sentence: Vec<Vec<Mention>> = (0..corpus.len()).map(|_| Vec::new()).collect();
    for k in kept {
        let slot = &mut per_sentence[k.sentence];
        if slot.iter().all(|m| !m.span.overlaps(&k.span)) {
            slot.push(Mention {
                span: k.span,
                label: k.label.into(),
            });
        }
    }
    let sentences = corpus
        .sentences
        .iter()
        .zip(per_sentence)
        .map(|(s, mentions)| {
            let mut out = s.clone();
            out.gold = None;
            out.with_gold(mentions).expect("spans come from the same sentence")
        })
        .collect();
    Ok(Corpus::new(sentences))
}
