//! Noise profile TSV: a `type<TAB>accuracy<TAB>population` header, then one
//! row per entity type.

use std::fmt::Write as _;

use hgl_core::corpus::{NoiseEntry, NoiseProfile};
use hgl_core::Accuracy;

use crate::error::ParseError;

const HEADER: &str = "type\taccuracy\tpopulation";

pub fn write_profile(profile: &NoiseProfile) -> String {
    let mut out = format!("{HEADER}\n");
    for (ty, e) in profile {
        writeln!(out, "{ty}\t{}\t{}", e.accuracy, e.population).expect("writing to a string");
    }
    out
}

/// Reads a profile; accuracies off the 5% grid are snapped onto it.
pub fn parse_profile(text: &str) -> Result<NoiseProfile, ParseError> {
    let mut profile = NoiseProfile::new();
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h.trim_end() == HEADER => {}
        _ => return Err(ParseError::new(1, format!("expected header {HEADER:?}"))),
    }
    for (i, line) in lines {
        let n = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.trim_end().split('\t').collect();
        let [ty, acc, pop] = cols[..] else {
            return Err(ParseError::new(n, format!("expected 3 columns, found {}", cols.len())));
        };
        let raw: f64 = acc.parse().map_err(|_| ParseError::new(n, format!("bad accuracy {acc:?}")))?;
        let accuracy = Accuracy::snap(raw).map_err(|e| ParseError::new(n, e.to_string()))?;
        let population = pop.parse().map_err(|_| ParseError::new(n, format!("bad population {pop:?}")))?;
        if profile
            .insert(ty.to_string(), NoiseEntry { accuracy, population })
            .is_some()
        {
            return Err(ParseError::new(n, format!("type {ty:?} listed twice")));
        }
    }
    Ok(profile)
}

/// Parses a `TYPE=RATE` noise-rate override into a type and an accuracy.
pub fn parse_override(s: &str) -> Result<(String, Accuracy), String> {
    let (ty, rate) = s
        .split_once('=')
        .ok_or_else(|| format!("noise rate {s:?} is not TYPE=RATE"))?;
    let rate: f64 = rate.trim().parse().map_err(|_| format!("bad noise rate in {s:?}"))?;
    let ty = ty.trim();
    if ty.is_empty() {
        return Err(format!("noise rate {s:?} names no type"));
    }
    let accuracy = Accuracy::snap(1.0 - rate).map_err(|e| format!("{s:?}: {e}"))?;
    Ok((ty.to_string(), accuracy))
}
