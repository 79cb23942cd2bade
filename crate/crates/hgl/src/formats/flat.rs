//! Flat `key = value` configuration text. `#` starts a comment line.

use std::fmt::Write as _;

use crate::error::ParseError;

pub fn parse_flat(text: &str) -> Result<Vec<(String, String)>, ParseError> {
    let mut out: Vec<(String, String)> = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let n = i + 1;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| ParseError::new(n, format!("expected key = value, found {line:?}")))?;
        let (k, v) = (k.trim(), v.trim());
        if k.is_empty() {
            return Err(ParseError::new(n, "empty key"));
        }
        if out.iter().any(|(seen, _)| seen == k) {
            return Err(ParseError::new(n, format!("key {k:?} set twice")));
        }
        out.push((k.to_string(), v.to_string()));
    }
    Ok(out)
}

pub fn write_flat(comments: &[String], entries: &[(String, String)]) -> String {
    let mut out = String::new();
    for c in comments {
        writeln!(out, "# {c}").expect("writing to a string");
    }
    for (k, v) in entries {
        writeln!(out, "{k} = {v}").expect("writing to a string");
    }
    out
}
