use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec::Vec;

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum DictionaryError {
    #[error("empty phrase for type {0:?}")]
    EmptyPhrase(String),
    #[error("empty entity type")]
    EmptyType,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
struct TrieNode {
    children: BTreeMap<String, TrieNode>,
    types: BTreeSet<String>,
}

/// Entity type to phrase sets, with a token trie for longest-prefix lookup.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Dictionary {
    entries: BTreeMap<String, BTreeSet<Vec<String>>>,
    root: TrieNode,
}

impl Dictionary {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds a phrase; returns `false` when it was already present.
    pub fn insert(&mut self, entity_type: &str, phrase: Vec<String>) -> Result<bool, DictionaryError> {
        if entity_type.is_empty() {
            return Err(DictionaryError::EmptyType);
        }
        if phrase.is_empty() || phrase.iter().any(|t| t.is_empty()) {
            return Err(DictionaryError::EmptyPhrase(entity_type.into()));
        }
        let mut node = &mut self.root;
        for tok in &phrase {
            node = node.children.entry(tok.clone()).or_default();
        }
        node.types.insert(entity_type.into());
        Ok(self
            .entries
            .entry(entity_type.into())
            .or_default()
            .insert(phrase))
    }

    pub fn contains(&self, entity_type: &str, phrase: &[String]) -> bool {
        self.entries
            .get(entity_type)
            .is_some_and(|set| set.contains(phrase))
    }

    pub fn types(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    pub fn phrases(&self, entity_type: &str) -> impl Iterator<Item = &Vec<String>> {
        self.entries.get(entity_type).into_iter().flatten()
    }

    pub fn phrase_count(&self, entity_type: &str) -> usize {
        self.entries.get(entity_type).map_or(0, BTreeSet::len)
    }

    /// All `(type, phrase)` pairs in sorted order.
    pub fn iter(&self) -> impl Iterator<Item = (&str, &Vec<String>)> {
        self.entries
            .iter()
            .flat_map(|(ty, set)| set.iter().map(move |p| (ty.as_str(), p)))
    }

    pub fn len(&self) -> usize {
        self.entries.values().map(BTreeSet::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Types of every phrase equal to `phrase`.
    pub fn lookup(&self, phrase: &[String]) -> Option<&BTreeSet<String>> {
        let mut node = &self.root;
        for tok in phrase {
            node = node.children.get(tok)?;
        }
        (!node.types.is_empty()).then_some(&node.types)
    }

    /// Longest phrase that is a prefix of `tokens`, with its types.
    pub fn longest_match(&self, tokens: &[String]) -> Option<(usize, &BTreeSet<String>)> {
        let mut node = &self.root;
        let mut best = None;
        for (i, tok) in tokens.iter().enumerate() {
            match node.children.get(tok) {
                Some(next) => {
                    node = next;
                    if !node.types.is_empty() {
                        best = Some((i + 1, &node.types));
                    }
                }
                None => break,
            }
        }
        best
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::toks;

    #[test]
    fn duplicates_are_collapsed() {
        let mut d = Dictionary::new();
        assert!(d.insert("PER", toks("George Washington")).unwrap());
        assert!(!d.insert("PER", toks("George Washington")).unwrap());
        assert_eq!(d.len(), 1);
        assert!(d.contains("PER", &toks("George Washington")));
    }

    #[test]
    fn empty_phrase_is_rejected() {
        let mut d = Dictionary::new();
        assert_eq!(
            d.insert("PER", Vec::new()),
            Err(DictionaryError::EmptyPhrase("PER".into()))
        );
        assert_eq!(d.insert("", toks("x")), Err(DictionaryError::EmptyType));
    }

    #[test]
    fn longest_match_walks_the_trie() {
        let mut d = Dictionary::new();
        d.insert("GPE", toks("New York")).unwrap();
        d.insert("GPE", toks("New York City")).unwrap();
        d.insert("ORG", toks("New")).unwrap();
        let (len, types) = d.longest_match(&toks("New York City Hall")).unwrap();
        assert_eq!(len, 3);
        assert!(types.contains("GPE"));
        let (len, types) = d.longest_match(&toks("New Jersey")).unwrap();
        assert_eq!((len, types.iter().next().unwrap().as_str()), (1, "ORG"));
        assert!(d.longest_match(&toks("Old York")).is_none());
    }
}
