//! Mention blocking: surfaces likely false negatives for denoising.
//!
//! Candidate phrases come from a chunker and exclude every span the
//! dictionary already labels with the target type. A context-free phrase
//! classifier, trained on dictionary phrases, scores each distinct phrase;
//! the top fraction forms the block. Every occurrence of a blocked phrase
//! becomes an instance of a second pool that is denoised jointly with the
//! weakly labelled pool.

mod classifier;

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::accuracy::Accuracy;
use crate::corpus::{weak_label, Corpus, Dictionary, Instance, Source, Span};
use crate::training::{self, AuxPool, LossKind, EpochRecord, TrainConfig, TrainOutcome, TrainingError};

pub use classifier::{phrase_features, ClassifierConfig, PhraseClassifier};

/// Longest span the capitalisation chunker emits.
pub const MAX_CHUNK_LEN: usize = 6;

/// Fewer dictionary phrases than this trigger a warning.
pub const MIN_DICTIONARY_PHRASES: usize = 20;

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum BlockingError {
    #[error("dictionary has no phrases of type {0:?}")]
    NoPositives(String),
    #[error("keep fraction {0} is outside (0, 1]")]
    BadFraction(f64),
    #[error("block has no accuracy; estimate it from gold or supply one")]
    NoBlockAccuracy,
    #[error("no occurrence of a blocked phrase in the development corpus")]
    NoDevOccurrences,
    #[error("an occurrence of a blocked phrase carries no gold flag")]
    MissingGold,
    #[error(transparent)]
    Training(#[from] TrainingError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Chunker {
    /// Maximal runs of capitalised tokens, cut into pieces of at most
    /// [`MAX_CHUNK_LEN`] tokens.
    #[default]
    Capitalized,
    /// The chunk spans stored with each sentence.
    Auxiliary,
}

fn is_capitalized(token: &str) -> bool {
    token.chars().next().is_some_and(char::is_uppercase)
}

impl Chunker {
    pub fn name(self) -> &'static str {
        match self {
            Chunker::Capitalized => "capitalized",
            Chunker::Auxiliary => "auxiliary",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        [Chunker::Capitalized, Chunker::Auxiliary]
            .into_iter()
            .find(|c| c.name() == name)
    }

    pub fn chunks(self, tokens: &[String], aux: Option<&[Span]>) -> Vec<Span> {
        match self {
            Chunker::Auxiliary => aux.map(<[Span]>::to_vec).unwrap_or_default(),
            Chunker::Capitalized => {
                let mut out = Vec::new();
                let mut i = 0;
                while i < tokens.len() {
                    if !is_capitalized(&tokens[i]) {
                        i += 1;
                        continue;
                    }
                    let start = i;
                    while i < tokens.len() && is_capitalized(&tokens[i]) {
                        i += 1;
                    }
                    let mut s = start;
                    while s < i {
                        let e = (s + MAX_CHUNK_LEN).min(i);
                        out.push(Span::new(s, e));
                        s = e;
                    }
                }
                out
            }
        }
    }
}

/// A distinct candidate phrase with every place it occurs.
#[derive(Clone, Debug, PartialEq)]
pub struct PhraseCandidate {
    pub tokens: Vec<String>,
    /// `(sentence index, span)` pairs in corpus order.
    pub occurrences: Vec<(usize, Span)>,
    pub score: f64,
}

/// Chunked spans that the dictionary does not already label as
/// `entity_type`, grouped by token sequence in lexicographic order.
pub fn extract_candidates(
    corpus: &Corpus,
    dict: &Dictionary,
    entity_type: &str,
    chunker: Chunker,
) -> Vec<PhraseCandidate> {
    let matched: BTreeSet<(usize, Span)> = weak_label(corpus, dict)
        .into_iter()
        .filter(|i| i.entity_type == entity_type)
        .map(|i| (i.sentence, i.span))
        .collect();
    let mut grouped: BTreeMap<&[String], Vec<(usize, Span)>> = BTreeMap::new();
    for (si, sentence) in corpus.sentences.iter().enumerate() {
        for span in chunker.chunks(&sentence.tokens, sentence.chunks.as_deref()) {
            let tokens = sentence.span_tokens(span);
            if matched.contains(&(si, span)) || dict.contains(entity_type, tokens) {
                continue;
            }
            grouped.entry(tokens).or_default().push((si, span));
        }
    }
    grouped
        .into_iter()
        .map(|(tokens, mut occurrences)| {
            occurrences.dedup();
            PhraseCandidate {
                tokens: tokens.to_vec(),
                occurrences,
                score: 0.0,
            }
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq)]
pub enum BlockingWarning {
    FewDictionaryPhrases { entity_type: String, count: usize },
    NoNegatives { entity_type: String },
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainedClassifier {
    pub classifier: PhraseClassifier,
    pub warnings: Vec<BlockingWarning>,
}

/// Fits a phrase classifier: dictionary phrases of the type against an
/// equally sized seeded sample of candidates and other-type phrases.
pub fn train_phrase_classifier(
    dict: &Dictionary,
    entity_type: &str,
    candidates: &[PhraseCandidate],
    config: &ClassifierConfig,
    seed: u64,
) -> Result<TrainedClassifier, BlockingError> {
    let positives: Vec<Vec<String>> = dict.phrases(entity_type).cloned().collect();
    if positives.is_empty() {
        return Err(BlockingError::NoPositives(entity_type.into()));
    }
    let mut warnings = Vec::new();
    if positives.len() < MIN_DICTIONARY_PHRASES {
        warnings.push(BlockingWarning::FewDictionaryPhrases {
            entity_type: entity_type.into(),
            count: positives.len(),
        });
    }
    let mut pool: BTreeSet<&[String]> = candidates.iter().map(|c| c.tokens.as_slice()).collect();
    for (ty, phrase) in dict.iter() {
        if ty != entity_type && !dict.contains(entity_type, phrase) {
            pool.insert(phrase);
        }
    }
    let mut pool: Vec<&[String]> = pool.into_iter().collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    pool.shuffle(&mut rng);
    pool.truncate(positives.len());
    if pool.is_empty() {
        warnings.push(BlockingWarning::NoNegatives {
            entity_type: entity_type.into(),
        });
    }
    let examples: Vec<(Vec<String>, bool)> = positives
        .into_iter()
        .map(|p| (p, true))
        .chain(pool.into_iter().map(|p| (p.to_vec(), false)))
        .collect();
    Ok(TrainedClassifier {
        classifier: classifier::fit(&examples, config, &mut rng),
        warnings,
    })
}

/// Candidates ranked by classifier score; the first `admitted` form the
/// block.
#[derive(Clone, Debug, PartialEq)]
pub struct Block {
    pub entity_type: String,
    pub ranked: Vec<PhraseCandidate>,
    pub admitted: usize,
    pub keep_fraction: f64,
    /// Fraction of blocked occurrences that are true mentions.
    pub accuracy: Option<Accuracy>,
}

/// `ceil(fraction * n)`, robust to binary artefacts such as
/// `0.1 * 30 = 3.0000000000000004`.
pub fn admitted_count(fraction: f64, n: usize) -> usize {
    (libm::ceil(fraction * n as f64 - 1e-9) as usize).min(n)
}

/// Scores every candidate and admits the top `ceil(fraction * count)`,
/// ties broken by phrase order.
pub fn build_block(
    entity_type: &str,
    mut candidates: Vec<PhraseCandidate>,
    classifier: &PhraseClassifier,
    keep_fraction: f64,
) -> Result<Block, BlockingError> {
    if !(keep_fraction > 0.0 && keep_fraction <= 1.0) {
        return Err(BlockingError::BadFraction(keep_fraction));
    }
    for c in &mut candidates {
        c.score = classifier.score(&c.tokens);
    }
    candidates.sort_by(|a, b| b.score.total_cmp(&a.score).then_with(|| a.tokens.cmp(&b.tokens)));
    Ok(Block {
        entity_type: entity_type.into(),
        admitted: admitted_count(keep_fraction, candidates.len()),
        ranked: candidates,
        keep_fraction,
        accuracy: None,
    })
}

impl Block {
    pub fn admitted(&self) -> &[PhraseCandidate] {
        &self.ranked[..self.admitted]
    }

    pub fn with_accuracy(mut self, accuracy: Accuracy) -> Self {
        self.accuracy = Some(accuracy);
        self
    }

    /// One instance per occurrence of an admitted phrase in `corpus`, which
    /// must be the corpus the candidates were extracted from.
    pub fn instances(&self, corpus: &Corpus) -> Vec<Instance> {
        let mut out: Vec<Instance> = self
            .admitted()
            .iter()
            .flat_map(|c| c.occurrences.iter())
            .map(|&(sentence, span)| Instance {
                sentence,
                span,
                entity_type: self.entity_type.clone(),
                source: Source::BlockedCandidate,
                gold: corpus.sentences[sentence].is_gold(span, &self.entity_type),
            })
            .collect();
        out.sort_by_key(|i| (i.sentence, i.span));
        out
    }

    /// Snaps the gold-mention rate of the admitted phrases' occurrences in a
    /// development corpus to the 5% grid.
    pub fn estimate_accuracy(&self, dev: &Corpus, dict: &Dictionary, chunker: Chunker) -> Result<Accuracy, BlockingError> {
        let admitted: BTreeSet<&[String]> = self.admitted().iter().map(|c| c.tokens.as_slice()).collect();
        let (mut total, mut correct) = (0usize, 0usize);
        for c in extract_candidates(dev, dict, &self.entity_type, chunker) {
            if !admitted.contains(c.tokens.as_slice()) {
                continue;
            }
            for (s, span) in c.occurrences {
                total += 1;
                match dev.sentences[s].is_gold(span, &self.entity_type) {
                    Some(true) => correct += 1,
                    Some(false) => {}
                    None => return Err(BlockingError::MissingGold),
                }
            }
        }
        Accuracy::from_counts(correct, total).map_err(|_| BlockingError::NoDevOccurrences)
    }
}

/// Planted false negatives of a type (gold mentions the dictionary missed)
/// and how many of them the block admits, as `(covered, total)`.
pub fn false_negative_coverage(block: &Block, corpus: &Corpus, dict: &Dictionary) -> (usize, usize) {
    let ty = &block.entity_type;
    let matched: BTreeSet<(usize, Span)> = weak_label(corpus, dict)
        .into_iter()
        .filter(|i| &i.entity_type == ty)
        .map(|i| (i.sentence, i.span))
        .collect();
    let blocked: BTreeSet<(usize, Span)> = block
        .admitted()
        .iter()
        .flat_map(|c| c.occurrences.iter().copied())
        .collect();
    let missed: Vec<(usize, Span)> = corpus
        .gold_mentions()
        .filter(|(s, m)| &m.label == ty && !matched.contains(&(*s, m.span)))
        .map(|(s, m)| (s, m.span))
        .collect();
    let covered = missed.iter().filter(|k| blocked.contains(k)).count();
    (covered, missed.len())
}

/// Trains one denoiser on the weakly labelled pool and the block together.
///
/// Each step adds `lambda` times the hypergeometric loss of a block batch,
/// ranked and weighted with the block accuracy, to the loss of a positive
/// batch. An empty block or `lambda = 0` reduces to plain training.
pub fn joint_train(
    corpus: &Corpus,
    positives: &[Instance],
    accuracy: Accuracy,
    block: &Block,
    lambda: f64,
    config: &TrainConfig,
    observer: &mut dyn FnMut(&EpochRecord),
) -> Result<TrainOutcome, BlockingError> {
    if config.loss != LossKind::Hgl {
        return Err(TrainingError::BadConfig("joint training uses the hypergeometric loss").into());
    }
    let blocked = block.instances(corpus);
    let aux = if blocked.is_empty() || lambda == 0.0 {
        None
    } else {
        Some(AuxPool {
            instances: &blocked,
            accuracy: block.accuracy.ok_or(BlockingError::NoBlockAccuracy)?,
            lambda,
        })
    };
    Ok(training::run(corpus, positives, accuracy, config, aux, observer)?)
}

#[cfg(test)]
mod tests;
