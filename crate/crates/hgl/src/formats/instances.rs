//! Instance tables: one weakly labelled or blocked span per row, optionally
//! with a confidence score.

use std::fmt::Write as _;

use hgl_core::{Corpus, Instance, Source};

use crate::error::ParseError;

pub const HEADER: &str = "type\tsentence\tdoc\tsent\tstart\tend\tsource\tgold\tscore\tphrase";

fn source_name(s: Source) -> &'static str {
    match s {
        Source::DictionaryMatch => "dictionary",
        Source::BlockedCandidate => "blocked",
    }
}

fn gold_name(g: Option<bool>) -> &'static str {
    match g {
        Some(true) => "1",
        Some(false) => "0",
        None => "-",
    }
}

/// Writes rows in the given order. Scores use the shortest representation
/// that reads back to the same value.
pub fn write_instances<'a>(corpus: &Corpus, rows: impl IntoIterator<Item = (&'a Instance, Option<f64>)>) -> String {
    let mut out = format!("{HEADER}\n");
    for (inst, score) in rows {
        let s = &corpus.sentences[inst.sentence];
        let score = score.map_or_else(|| "-".to_string(), |v| format!("{v}"));
        writeln!(
            out,
            "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{score}\t{}",
            inst.entity_type,
            inst.sentence,
            s.doc_id,
            s.sent_id,
            inst.span.start,
            inst.span.end,
            source_name(inst.source),
            gold_name(inst.gold),
            s.span_tokens(inst.span).join(" "),
        )
        .expect("writing to a string");
    }
    out
}

/// The columns evaluation needs from a scored table.
#[derive(Clone, Debug, PartialEq)]
pub struct ScoredRow {
    pub entity_type: String,
    pub sentence: usize,
    pub start: usize,
    pub end: usize,
    pub gold: Option<bool>,
    pub score: f64,
}

pub fn parse_scored(text: &str) -> Result<Vec<ScoredRow>, ParseError> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h.trim_end() == HEADER => {}
        _ => return Err(ParseError::new(1, "missing instance table header")),
    }
    let mut out = Vec::new();
    for (i, line) in lines {
        let n = i + 1;
        if line.is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() != 10 {
            return Err(ParseError::new(n, format!("expected 10 columns, found {}", cols.len())));
        }
        let num = |k: usize| -> Result<usize, ParseError> {
            cols[k]
                .parse()
                .map_err(|_| ParseError::new(n, format!("bad integer {:?}", cols[k])))
        };
        let gold = match cols[7] {
            "1" => Some(true),
            "0" => Some(false),
            "-" => None,
            g => return Err(ParseError::new(n, format!("bad gold flag {g:?}"))),
        };
        let score: f64 = cols[8]
            .parse()
            .map_err(|_| ParseError::new(n, format!("bad score {:?}", cols[8])))?;
        let (start, end) = (num(4)?, num(5)?);
        if start >= end {
            return Err(ParseError::new(n, format!("empty span {start}..{end}")));
        }
        out.push(ScoredRow {
            entity_type: cols[0].to_string(),
            sentence: num(1)?,
            start,
            end,
            gold,
            score,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use hgl_core::{Sentence, Span};

    #[test]
    fn scores_read_back_exactly() {
        let corpus = Corpus::new(vec![Sentence::new("d", "0", vec!["A".into(), "b".into()]).unwrap()]);
        let inst = Instance {
            sentence: 0,
            span: Span::new(0, 1),
            entity_type: "PER".into(),
            source: Source::DictionaryMatch,
            gold: Some(true),
        };
        let score = 0.1 + 0.2;
        let text = write_instances(&corpus, [(&inst, Some(score))]);
        let rows = parse_scored(&text).unwrap();
        assert_eq!(rows[0].score, score);
        assert_eq!(rows[0].gold, Some(true));
        assert_eq!((rows[0].start, rows[0].end), (0, 1));
    }

    #[test]
    fn unscored_rows_do_not_parse_as_scored() {
        let corpus = Corpus::new(vec![Sentence::new("d", "0", vec!["A".into()]).unwrap()]);
        let inst = Instance {
            sentence: 0,
            span: Span::new(0, 1),
            entity_type: "PER".into(),
            source: Source::BlockedCandidate,
            gold: None,
        };
        let text = write_instances(&corpus, [(&inst, None)]);
        assert!(text.contains("\tblocked\t-\t-\tA\n"));
        assert_eq!(parse_scored(&text).unwrap_err().line, 2);
    }
}
