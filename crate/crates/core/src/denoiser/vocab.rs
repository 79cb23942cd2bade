use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::corpus::Corpus;

pub const OOV: u32 = 0;
pub const BEG: u32 = 1;
pub const END: u32 = 2;

pub const OOV_TOKEN: &str = "[OOV]";
pub const BEG_TOKEN: &str = "[BEG]";
pub const END_TOKEN: &str = "[END]";

/// Token strings to embedding rows. Rows 0..3 are the out-of-vocabulary
/// token and the two span markers.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Vocab {
    index: BTreeMap<String, u32>,
    tokens: Vec<String>,
}

impl Default for Vocab {
    fn default() -> Self {
        Self::new()
    }
}

impl Vocab {
    pub fn new() -> Self {
        let tokens: Vec<String> = vec![OOV_TOKEN.into(), BEG_TOKEN.into(), END_TOKEN.into()];
        let index = tokens
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i as u32))
            .collect();
        Vocab { index, tokens }
    }

    /// Every token of `corpus`, in first-seen order.
    pub fn from_corpus(corpus: &Corpus) -> Self {
        let mut v = Self::new();
        for s in &corpus.sentences {
            for t in &s.tokens {
                v.insert(t);
            }
        }
        v
    }

    /// Rebuilds a vocabulary from its token list (row order).
    pub fn from_tokens(tokens: Vec<String>) -> Option<Self> {
        if tokens.len() < 3 || tokens[0] != OOV_TOKEN || tokens[1] != BEG_TOKEN || tokens[2] != END_TOKEN {
            return None;
        }
        let mut index = BTreeMap::new();
        for (i, t) in tokens.iter().enumerate() {
            if index.insert(t.clone(), i as u32).is_some() {
                return None;
            }
        }
        Some(Vocab { index, tokens })
    }

    /// Adds a token. Corpus tokens spelled like a reserved row map to OOV.
    pub fn insert(&mut self, token: &str) -> u32 {
        if let Some(&id) = self.index.get(token) {
            return if id < 3 { OOV } else { id };
        }
        let id = self.tokens.len() as u32;
        self.tokens.push(token.into());
        self.index.insert(token.into(), id);
        id
    }

    pub fn id(&self, token: &str) -> u32 {
        match self.index.get(token) {
            Some(&id) if id >= 3 => id,
            _ => OOV,
        }
    }

    pub fn token(&self, id: u32) -> Option<&str> {
        self.tokens.get(id as usize).map(String::as_str)
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}
