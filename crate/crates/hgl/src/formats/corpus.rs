//! Column corpus files.
//!
//! One token per line as `token<TAB>tag`, where the tag is BIO (`B-TYPE`,
//! `I-TYPE`, `O`) or `-` when the sentence carries no gold. An optional third
//! column holds chunk tags in the same BIO shape (labels ignored), used as
//! blocking candidates. Blank lines end sentences and `-DOCSTART- <id>` opens
//! a document. Sentence ids are positions within their document.

use std::fmt::Write as _;

use hgl_core::{Corpus, Mention, Sentence, Span};

use crate::error::ParseError;

pub const DOCSTART: &str = "-DOCSTART-";
const NO_GOLD: &str = "-";

#[derive(Clone, Copy, PartialEq)]
enum Tag<'a> {
    Begin(&'a str),
    Inside(&'a str),
    Outside,
}

fn parse_tag(tag: &str) -> Option<Tag<'_>> {
    if tag == "O" {
        return Some(Tag::Outside);
    }
    let (prefix, label) = tag.split_at_checked(2)?;
    if label.is_empty() {
        return None;
    }
    match prefix {
        "B-" => Some(Tag::Begin(label)),
        "I-" => Some(Tag::Inside(label)),
        _ => None,
    }
}

/// Collects BIO spans. `line0` is the file line of the first tag.
fn spans<'a>(tags: &[&'a str], line0: usize, what: &str) -> Result<Vec<(Span, &'a str)>, ParseError> {
    let mut out = Vec::new();
    let mut open: Option<(usize, &str)> = None;
    for (i, raw) in tags.iter().enumerate() {
        let tag = parse_tag(raw).ok_or_else(|| ParseError::new(line0 + i, format!("bad {what} tag {raw:?}")))?;
        match tag {
            Tag::Inside(label) => match open {
                Some((_, l)) if l == label => continue,
                _ => {
                    return Err(ParseError::new(
                        line0 + i,
                        format!("{what} tag {raw:?} does not continue a B-{label} or I-{label}"),
                    ))
                }
            },
            Tag::Begin(label) => {
                if let Some((s, l)) = open.take() {
                    out.push((Span::new(s, i), l));
                }
                open = Some((i, label));
            }
            Tag::Outside => {
                if let Some((s, l)) = open.take() {
                    out.push((Span::new(s, i), l));
                }
            }
        }
    }
    if let Some((s, l)) = open {
        out.push((Span::new(s, tags.len()), l));
    }
    Ok(out)
}

struct Pending<'a> {
    first_line: usize,
    rows: Vec<Vec<&'a str>>,
}

fn build(p: Pending<'_>, doc: &str, in_doc: usize) -> Result<Sentence, ParseError> {
    let at = |e: hgl_core::corpus::CorpusError| ParseError::new(p.first_line, e.to_string());
    let tokens: Vec<String> = p.rows.iter().map(|r| r[0].to_string()).collect();
    let mut sentence = Sentence::new(doc, in_doc.to_string(), tokens).map_err(at)?;
    let tags: Vec<&str> = p.rows.iter().map(|r| r[1]).collect();
    let no_gold = tags.iter().filter(|t| **t == NO_GOLD).count();
    if no_gold == 0 {
        let gold = spans(&tags, p.first_line, "gold")?
            .into_iter()
            .map(|(span, label)| Mention {
                span,
                label: label.to_string(),
            })
            .collect();
        sentence = sentence.with_gold(gold).map_err(at)?;
    } else if no_gold != tags.len() {
        let first = tags[0] == NO_GOLD;
        let k = tags.iter().position(|t| (*t == NO_GOLD) != first).unwrap_or(0);
        return Err(ParseError::new(p.first_line + k, "sentence mixes gold tags with '-'"));
    }
    if p.rows[0].len() == 3 {
        let chunk_tags: Vec<&str> = p.rows.iter().map(|r| r[2]).collect();
        let chunks = spans(&chunk_tags, p.first_line, "chunk")?.into_iter().map(|(s, _)| s).collect();
        sentence = sentence.with_chunks(chunks).map_err(at)?;
    }
    Ok(sentence)
}

pub fn parse_corpus(text: &str) -> Result<Corpus, ParseError> {
    let mut sentences = Vec::new();
    let mut doc = String::from("0");
    let mut docs_seen = 0usize;
    let mut in_doc = 0usize;
    let mut pending: Option<Pending> = None;
    for (i, line) in text.lines().enumerate() {
        let n = i + 1;
        let line = line.strip_suffix('\r').unwrap_or(line);
        if line.is_empty() {
            if let Some(p) = pending.take() {
                sentences.push(build(p, &doc, in_doc)?);
                in_doc += 1;
            }
            continue;
        }
        if let Some(rest) = line.strip_prefix(DOCSTART) {
            if pending.is_some() {
                return Err(ParseError::new(n, "document marker inside a sentence"));
            }
            // Bare markers are numbered, counting an unmarked leading document.
            let ordinal = docs_seen + usize::from(!sentences.is_empty() && docs_seen == 0);
            let id = rest.trim();
            doc = if id.is_empty() { ordinal.to_string() } else { id.to_string() };
            docs_seen = ordinal + 1;
            in_doc = 0;
            continue;
        }
        let cols: Vec<&str> = line.split('\t').collect();
        if !(2..=3).contains(&cols.len()) {
            return Err(ParseError::new(n, format!("expected 2 or 3 tab-separated columns, found {}", cols.len())));
        }
        if cols[0].is_empty() {
            return Err(ParseError::new(n, "empty token"));
        }
        let p = pending.get_or_insert_with(|| Pending {
            first_line: n,
            rows: Vec::new(),
        });
        if p.rows.first().is_some_and(|r| r.len() != cols.len()) {
            return Err(ParseError::new(n, "column count differs from the rest of the sentence"));
        }
        p.rows.push(cols);
    }
    if let Some(p) = pending.take() {
        sentences.push(build(p, &doc, in_doc)?);
    }
    Ok(Corpus::new(sentences))
}

fn bio(len: usize, spans: &[(Span, &str)]) -> Result<Vec<String>, String> {
    let mut tags = vec![String::from("O"); len];
    let mut taken = vec![false; len];
    for (span, label) in spans {
        if taken[span.start..span.end].iter().any(|&t| t) {
            return Err(format!("overlapping spans at {}..{}", span.start, span.end));
        }
        for (k, pos) in (span.start..span.end).enumerate() {
            taken[pos] = true;
            tags[pos] = format!("{}-{label}", if k == 0 { 'B' } else { 'I' });
        }
    }
    Ok(tags)
}

/// Serialises a corpus. Fails on overlapping gold mentions or chunks, on
/// sentence ids that are not positions within their document, and when only
/// some sentences carry chunks.
pub fn write_corpus(corpus: &Corpus) -> Result<String, String> {
    let mut out = String::new();
    let with_chunks = corpus.sentences.first().is_some_and(|s| s.chunks.is_some());
    let mut current: Option<&str> = None;
    let mut in_doc = 0usize;
    for (i, s) in corpus.sentences.iter().enumerate() {
        if current != Some(s.doc_id.as_str()) {
            if s.doc_id.chars().any(char::is_whitespace) || s.doc_id.is_empty() {
                return Err(format!("sentence {i}: document id {:?} cannot be written", s.doc_id));
            }
            writeln!(out, "{DOCSTART} {}", s.doc_id).expect("writing to a string");
            out.push('\n');
            current = Some(&s.doc_id);
            in_doc = 0;
        }
        if s.sent_id != in_doc.to_string() {
            return Err(format!(
                "sentence {i}: id {:?} is not its position {in_doc} in document {:?}",
                s.sent_id, s.doc_id
            ));
        }
        if s.chunks.is_some() != with_chunks {
            return Err(format!("sentence {i}: chunk column present on some sentences only"));
        }
        let gold = match &s.gold {
            Some(g) => {
                let spans: Vec<(Span, &str)> = g.iter().map(|m| (m.span, m.label.as_str())).collect();
                bio(s.len(), &spans).map_err(|e| format!("sentence {i}: gold {e}"))?
            }
            None => vec![NO_GOLD.to_string(); s.len()],
        };
        let chunks = match &s.chunks {
            Some(c) => {
                let spans: Vec<(Span, &str)> = c.iter().map(|&sp| (sp, "C")).collect();
                Some(bio(s.len(), &spans).map_err(|e| format!("sentence {i}: chunk {e}"))?)
            }
            None => None,
        };
        for (k, tok) in s.tokens.iter().enumerate() {
            match &chunks {
                Some(c) => writeln!(out, "{tok}\t{}\t{}", gold[k], c[k]),
                None => writeln!(out, "{tok}\t{}", gold[k]),
            }
            .expect("writing to a string");
        }
        out.push('\n');
        in_doc += 1;
    }
    Ok(out)
}
