//! Dictionary TSV: `TYPE<TAB>token token ...` per line.

use std::fmt::Write as _;

use hgl_core::Dictionary;

use crate::error::ParseError;

/// Parses a dictionary. Blank lines are skipped; duplicates collapse.
pub fn parse_dictionary(text: &str) -> Result<Dictionary, ParseError> {
    let mut dict = Dictionary::new();
    for (i, line) in text.lines().enumerate() {
        let n = i + 1;
        let line = line.strip_suffix('\r').unwrap_or(line);
        if line.trim().is_empty() {
            continue;
        }
        let (ty, phrase) = line
            .split_once('\t')
            .ok_or_else(|| ParseError::new(n, "missing tab between type and phrase"))?;
        let ty = ty.trim();
        if ty.is_empty() || ty.contains(char::is_whitespace) {
            return Err(ParseError::new(n, format!("bad entity type {ty:?}")));
        }
        let tokens: Vec<String> = phrase.split_whitespace().map(String::from).collect();
        if tokens.is_empty() {
            return Err(ParseError::new(n, "empty phrase"));
        }
        dict.insert(ty, tokens).map_err(|e| ParseError::new(n, e.to_string()))?;
    }
    Ok(dict)
}

/// One line per entry, sorted by type then phrase.
pub fn write_dictionary(dict: &Dictionary) -> String {
    let mut out = String::new();
    for (ty, phrase) in dict.iter() {
        writeln!(out, "{ty}\t{}", phrase.join(" ")).expect("writing to a string");
    }
    out
}
