//! Text formats read and written by the pipeline, plus file helpers that
//! attach paths and line numbers to failures.

pub mod corpus;
pub mod dictionary;
pub mod flat;
pub mod instances;
pub mod model;
pub mod noise;
pub mod report;

use std::fs;
use std::path::Path;

use hgl_core::corpus::NoiseProfile;
use hgl_core::{Corpus, Dictionary};

use crate::error::{Error, ParseError, Result};

pub fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn read_with<T>(path: &Path, parse: impl FnOnce(&str) -> Result<T, ParseError>) -> Result<T> {
    parse(&read_text(path)?).map_err(|e| Error::parse(path, e))
}

pub fn load_corpus(path: &Path) -> Result<Corpus> {
    read_with(path, corpus::parse_corpus)
}

pub fn load_dictionary(path: &Path) -> Result<Dictionary> {
    read_with(path, dictionary::parse_dictionary)
}

pub fn load_profile(path: &Path) -> Result<NoiseProfile> {
    read_with(path, noise::parse_profile)
}

pub fn load_config(path: &Path) -> Result<Vec<(String, String)>> {
    read_with(path, flat::parse_flat)
}
