//! Sentences, mention spans, dictionaries and weak labelling.

mod dictionary;
mod noise;
pub mod synth;

use alloc::string::String;
use alloc::vec::Vec;

pub use dictionary::{Dictionary, DictionaryError};
pub use noise::{estimate_noise_rate, NoiseEntry, NoiseError, NoiseProfile};

/// Half-open token range `[start, end)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Span {
    pub start: usize,
    pub end: usize,
}

impl Span {
    pub fn new(start: usize, end: usize) -> Self {
        debug_assert!(start < end);
        Span { start, end }
    }

    pub fn len(&self) -> usize {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.end <= self.start
    }

    pub fn overlaps(&self, other: &Span) -> bool {
        self.start < other.end && other.start < self.end
    }

    pub fn fits(&self, sentence_len: usize) -> bool {
        self.start < self.end && self.end <= sentence_len
    }
}

/// A typed span.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Mention {
    pub span: Span,
    pub label: String,
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum CorpusError {
    #[error("sentence has no tokens")]
    EmptySentence,
    #[error("token {0:?} contains a tab or newline")]
    BadToken(String),
    #[error("span {start}..{end} does not fit a sentence of {len} tokens")]
    BadSpan { start: usize, end: usize, len: usize },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Sentence {
    pub doc_id: String,
    pub sent_id: String,
    pub tokens: Vec<String>,
    /// Outermost gold mentions, `None` when the corpus carries no gold.
    pub gold: Option<Vec<Mention>>,
    /// Externally supplied chunk spans used as blocking candidates.
    pub chunks: Option<Vec<Span>>,
}

impl Sentence {
    pub fn new(
        doc_id: impl Into<String>,
        sent_id: impl Into<String>,
        tokens: Vec<String>,
    ) -> Result<Self, CorpusError> {
        if tokens.is_empty() {
            return Err(CorpusError::EmptySentence);
        }
        if let Some(bad) = tokens.iter().find(|t| t.contains(['\t', '\n', '\r']) || t.is_empty()) {
            return Err(CorpusError::BadToken(bad.clone()));
        }
        Ok(Sentence {
            doc_id: doc_id.into(),
            sent_id: sent_id.into(),
            tokens,
            gold: None,
            chunks: None,
        })
    }

    pub fn with_gold(mut self, mut gold: Vec<Mention>) -> Result<Self, CorpusError> {
        for m in &gold {
            self.check_span(m.span)?;
        }
        gold.sort();
        self.gold = Some(gold);
        Ok(self)
    }

    pub fn with_chunks(mut self, mut chunks: Vec<Span>) -> Result<Self, CorpusError> {
        for &s in &chunks {
            self.check_span(s)?;
        }
        chunks.sort();
        self.chunks = Some(chunks);
        Ok(self)
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn span_tokens(&self, span: Span) -> &[String] {
        &self.tokens[span.start..span.end]
    }

    /// Whether `span` carries gold label `label`. `None` without gold.
    pub fn is_gold(&self, span: Span, label: &str) -> Option<bool> {
        self.gold
            .as_ref()
            .map(|g| g.iter().any(|m| m.span == span && m.label == label))
    }

    fn check_span(&self, span: Span) -> Result<(), CorpusError> {
        if span.fits(self.len()) {
            Ok(())
        } else {
            Err(CorpusError::BadSpan {
                start: span.start,
                end: span.end,
                len: self.len(),
            })
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Corpus {
    pub sentences: Vec<Sentence>,
}

impl Corpus {
    pub fn new(sentences: Vec<Sentence>) -> Self {
        Corpus { sentences }
    }

    pub fn len(&self) -> usize {
        self.sentences.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sentences.is_empty()
    }

    pub fn has_gold(&self) -> bool {
        !self.sentences.is_empty() && self.sentences.iter().all(|s| s.gold.is_some())
    }

    /// Every gold mention in corpus order, as `(sentence index, mention)`.
    pub fn gold_mentions(&self) -> impl Iterator<Item = (usize, &Mention)> {
        self.sentences
            .iter()
            .enumerate()
            .flat_map(|(i, s)| s.gold.iter().flatten().map(move |m| (i, m)))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Source {
    DictionaryMatch,
    BlockedCandidate,
}

/// A typed span in a sentence of some corpus, referenced by index.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Instance {
    pub sentence: usize,
    pub span: Span,
    pub entity_type: String,
    pub source: Source,
    pub gold: Option<bool>,
}

impl Instance {
    pub fn tokens<'c>(&self, corpus: &'c Corpus) -> &'c [String] {
        corpus.sentences[self.sentence].span_tokens(self.span)
    }
}

/// Forward maximum matching over every sentence.
///
/// At each position the longest dictionary phrase starting there is taken,
/// one instance is emitted per type listing that phrase, and scanning resumes
/// after the match. Matching is exact and case-sensitive.
pub fn weak_label(corpus: &Corpus, dict: &Dictionary) -> Vec<Instance> {
    let mut out = Vec::new();
    for (si, sentence) in corpus.sentences.iter().enumerate() {
        let mut pos = 0;
        while pos < sentence.len() {
            match dict.longest_match(&sentence.tokens[pos..]) {
                Some((len, types)) => {
                    let span = Span::new(pos, pos + len);
                    for ty in types {
                        out.push(Instance {
                            sentence: si,
                            span,
                            entity_type: ty.clone(),
                            source: Source::DictionaryMatch,
                            gold: sentence.is_gold(span, ty),
                        });
                    }
                    pos += len;
                }
                None => pos += 1,
            }
        }
    }
    out
}

#[cfg(test)]
pub(crate) fn toks(s: &str) -> Vec<String> {
    use alloc::string::ToString;
    s.split_whitespace().map(|t| t.to_string()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn corpus(sentences: &[&str]) -> Corpus {
        Corpus::new(
            sentences
                .iter()
                .enumerate()
                .map(|(i, s)| Sentence::new("d", alloc::format!("{i}"), toks(s)).unwrap())
                .collect(),
        )
    }

    fn dict(entries: &[(&str, &str)]) -> Dictionary {
        let mut d = Dictionary::new();
        for (ty, phrase) in entries {
            d.insert(ty, toks(phrase)).unwrap();
        }
        d
    }

    #[test]
    fn longest_phrase_wins() {
        let c = corpus(&["New York City"]);
        let d = dict(&[("GPE", "New York"), ("GPE", "New York City")]);
        let got = weak_label(&c, &d);
        assert_eq!(got.len(), 1);
        assert_eq!(got[0].span, Span::new(0, 3));
        assert_eq!(got[0].entity_type, "GPE");
    }

    #[test]
    fn multi_type_phrase_emits_one_instance_per_type() {
        let c = corpus(&["Washington slept"]);
        let d = dict(&[("PER", "Washington"), ("GPE", "Washington")]);
        let got = weak_label(&c, &d);
        assert_eq!(got.len(), 2);
        assert!(got.iter().all(|i| i.span == Span::new(0, 1)));
        let mut types: Vec<_> = got.iter().map(|i| i.entity_type.as_str()).collect();
        types.sort();
        assert_eq!(types, vec!["GPE", "PER"]);
    }

    #[test]
    fn no_match_yields_nothing() {
        let c = corpus(&["nothing to see here"]);
        let d = dict(&[("PER", "Washington")]);
        assert!(weak_label(&c, &d).is_empty());
    }

    #[test]
    fn matching_is_case_sensitive_and_resumes_after_match() {
        let c = corpus(&["washington A B A B"]);
        let d = dict(&[("PER", "Washington"), ("X", "A B"), ("Y", "B A")]);
        let got = weak_label(&c, &d);
        let spans: Vec<_> = got.iter().map(|i| (i.span.start, i.span.end)).collect();
        assert_eq!(spans, vec![(1, 3), (3, 5)]);
    }

    #[test]
    fn gold_flags_follow_sentence_gold() {
        let s = Sentence::new("d", "0", toks("Washington visited Washington"))
            .unwrap()
            .with_gold(vec![Mention {
                span: Span::new(0, 1),
                label: "PER".into(),
            }])
            .unwrap();
        let c = Corpus::new(vec![s]);
        let d = dict(&[("PER", "Washington")]);
        let got = weak_label(&c, &d);
        assert_eq!(got[0].gold, Some(true));
        assert_eq!(got[1].gold, Some(false));
        let plain = corpus(&["Washington"]);
        assert_eq!(weak_label(&plain, &d)[0].gold, None);
    }

    #[test]
    fn sentence_validation() {
        assert_eq!(Sentence::new("d", "0", vec![]), Err(CorpusError::EmptySentence));
        assert!(matches!(
            Sentence::new("d", "0", vec!["a\tb".into()]),
            Err(CorpusError::BadToken(_))
        ));
        let s = Sentence::new("d", "0", toks("a b")).unwrap();
        assert!(s
            .with_gold(vec![Mention {
                span: Span { start: 1, end: 3 },
                label: "X".into()
            }])
            .is_err());
    }
}
