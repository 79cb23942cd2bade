//! Seeded synthetic corpora with planted dictionary noise.
//!
//! Every entity type owns a set of gold phrases whose tokens share a
//! type-specific suffix, so a phrase's type is readable from its shape. Gold
//! mentions sit between type-specific trigger words; non-entity occurrences
//! sit between generic filler words. The dictionary lists a subset of the
//! gold phrases, and part of it is ambiguous: those phrases also occur as
//! non-entities or, when shared with a partner type, as mentions of the
//! partner. Occurrences are planned against exact per-type budgets so the
//! realised noise rate of the weak labels is the configured one up to
//! rounding.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{Corpus, Dictionary, Mention, Sentence, Span};

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum SynthError {
    #[error("unknown config key {0:?}")]
    UnknownKey(String),
    #[error("bad value {value:?} for {key}")]
    BadValue { key: String, value: String },
    #[error("infeasible config: {0}")]
    Infeasible(String),
}

#[derive(Clone, Debug, PartialEq)]
pub struct SynthConfig {
    pub types: Vec<String>,
    /// Weakly labelled instances per type in the training split.
    pub instances_per_type: usize,
    /// Default noise rate (1 - accuracy) of the weak labels.
    pub noise_rate: f64,
    /// Per-type noise-rate overrides.
    pub type_noise_rate: BTreeMap<String, f64>,
    /// Fraction of each type's dictionary phrases that are ambiguous.
    pub ambiguity_rate: f64,
    /// Fraction of ambiguous phrases also listed under a partner type.
    pub cross_type_rate: f64,
    /// Fraction of gold mentions whose phrase is withheld from the dictionary.
    pub fn_rate: f64,
    pub phrases_per_type: usize,
    pub filler_vocab: usize,
    pub capitalized_vocab: usize,
    /// Probability that a sentence carries a capitalised non-entity run.
    pub capitalized_rate: f64,
    pub triggers_per_type: usize,
    pub max_mentions_per_sentence: usize,
    pub sentences_per_doc: usize,
    /// Size of the development split relative to the training split.
    pub dev_fraction: f64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            types: vec!["PER".into()],
            instances_per_type: 1000,
            noise_rate: 0.5,
            type_noise_rate: BTreeMap::new(),
            ambiguity_rate: 0.3,
            cross_type_rate: 0.5,
            fn_rate: 0.0,
            phrases_per_type: 200,
            filler_vocab: 2000,
            capitalized_vocab: 400,
            capitalized_rate: 0.3,
            triggers_per_type: 4,
            max_mentions_per_sentence: 2,
            sentences_per_doc: 20,
            dev_fraction: 0.2,
        }
    }
}

fn parse<T: core::str::FromStr>(key: &str, value: &str) -> Result<T, SynthError> {
    value.trim().parse().map_err(|_| SynthError::BadValue {
        key: key.into(),
        value: value.into(),
    })
}

impl SynthConfig {
    /// Sets one flat `key = value` entry. `noise_rate.TYPE` sets a per-type
    /// override.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), SynthError> {
        match key {
            "types" => {
                self.types = value
                    .split(',')
                    .map(str::trim)
                    .filter(|s| !s.is_empty())
                    .map(String::from)
                    .collect()
            }
            "instances_per_type" => self.instances_per_type = parse(key, value)?,
            "noise_rate" => self.noise_rate = parse(key, value)?,
            "ambiguity_rate" => self.ambiguity_rate = parse(key, value)?,
            "cross_type_rate" => self.cross_type_rate = parse(key, value)?,
            "fn_rate" => self.fn_rate = parse(key, value)?,
            "phrases_per_type" => self.phrases_per_type = parse(key, value)?,
            "filler_vocab" => self.filler_vocab = parse(key, value)?,
            "capitalized_vocab" => self.capitalized_vocab = parse(key, value)?,
            "capitalized_rate" => self.capitalized_rate = parse(key, value)?,
            "triggers_per_type" => self.triggers_per_type = parse(key, value)?,
            "max_mentions_per_sentence" => self.max_mentions_per_sentence = parse(key, value)?,
            "sentences_per_doc" => self.sentences_per_doc = parse(key, value)?,
            "dev_fraction" => self.dev_fraction = parse(key, value)?,
            _ => match key.strip_prefix("noise_rate.") {
                Some(ty) if !ty.is_empty() => {
                    self.type_noise_rate.insert(ty.into(), parse(key, value)?);
                }
                _ => return Err(SynthError::UnknownKey(key.into())),
            },
        }
        Ok(())
    }

    /// Flat `(key, value)` pairs that reproduce this config through [`set`].
    ///
    /// [`set`]: SynthConfig::set
    pub fn entries(&self) -> Vec<(String, String)> {
        let mut out = vec![
            ("types".into(), self.types.join(",")),
            ("instances_per_type".into(), self.instances_per_type.to_string()),
            ("noise_rate".into(), format!("{}", self.noise_rate)),
        ];
        for (ty, r) in &self.type_noise_rate {
            out.push((format!("noise_rate.{ty}"), format!("{r}")));
        }
        out.extend([
            ("ambiguity_rate".into(), format!("{}", self.ambiguity_rate)),
            ("cross_type_rate".into(), format!("{}", self.cross_type_rate)),
            ("fn_rate".into(), format!("{}", self.fn_rate)),
            ("phrases_per_type".into(), self.phrases_per_type.to_string()),
            ("filler_vocab".into(), self.filler_vocab.to_string()),
            ("capitalized_vocab".into(), self.capitalized_vocab.to_string()),
            ("capitalized_rate".into(), format!("{}", self.capitalized_rate)),
            ("triggers_per_type".into(), self.triggers_per_type.to_string()),
            (
                "max_mentions_per_sentence".into(),
                self.max_mentions_per_sentence.to_string(),
            ),
            ("sentences_per_doc".into(), self.sentences_per_doc.to_string()),
            ("dev_fraction".into(), format!("{}", self.dev_fraction)),
        ]);
        out
    }

    pub fn noise_rate_for(&self, ty: &str) -> f64 {
        self.type_noise_rate.get(ty).copied().unwrap_or(self.noise_rate)
    }

    fn validate(&self) -> Result<(), SynthError> {
        let bad = |msg: String| Err(SynthError::Infeasible(msg));
        if self.types.is_empty() {
            return bad("no entity types".into());
        }
        let unique: BTreeSet<_> = self.types.iter().collect();
        if unique.len() != self.types.len() {
            return bad("duplicate entity types".into());
        }
        for ty in self.type_noise_rate.keys() {
            if !unique.contains(ty) {
                return bad(format!("noise rate given for unknown type {ty:?}"));
            }
        }
        let unit = |name: &str, v: f64| -> Result<(), SynthError> {
            if (0.0..=1.0).contains(&v) {
                Ok(())
            } else {
                Err(SynthError::Infeasible(format!("{name} = {v} is outside [0, 1]")))
            }
        };
        for ty in &self.types {
            unit("noise_rate", self.noise_rate_for(ty))?;
        }
        unit("ambiguity_rate", self.ambiguity_rate)?;
        unit("cross_type_rate", self.cross_type_rate)?;
        unit("capitalized_rate", self.capitalized_rate)?;
        unit("dev_fraction", self.dev_fraction)?;
        if !(0.0..1.0).contains(&self.fn_rate) {
            return bad(format!("fn_rate = {} must be in [0, 1)", self.fn_rate));
        }
        if self.instances_per_type == 0 {
            return bad("instances_per_type must be positive".into());
        }
        if self.phrases_per_type < 3 {
            return bad("phrases_per_type must be at least 3".into());
        }
        if self.filler_vocab < 2 || self.triggers_per_type == 0 || self.max_mentions_per_sentence == 0 {
            return bad("filler_vocab >= 2, triggers_per_type >= 1 and max_mentions_per_sentence >= 1 are required".into());
        }
        if self.sentences_per_doc == 0 {
            return bad("sentences_per_doc must be positive".into());
        }
        for ty in &self.types {
            if self.noise_rate_for(ty) > 0.0 && self.ambiguity_rate == 0.0 {
                return bad(format!(
                    "type {ty:?} asks for noise but ambiguity_rate is 0, so no false positives can be planted"
                ));
            }
        }
        Ok(())
    }
}

/// Training split, development split and the distant-supervision dictionary.
#[derive(Clone, Debug, PartialEq)]
pub struct SynthOutput {
    pub train: Corpus,
    pub dev: Corpus,
    pub dictionary: Dictionary,
}

const SUFFIXES: [&[&str]; 6] = [
    &["son", "sky", "man"],
    &["corp", "tek", "ware"],
    &["land", "burg", "stan"],
    &["ridge", "field", "wood"],
    &["tron", "plex", "dyne"],
    &["ium", "ith", "ous"],
];

const ONSETS: [&str; 16] = [
    "b", "d", "f", "g", "k", "l", "m", "n", "p", "r", "s", "t", "v", "z", "ch", "sh",
];
const VOWELS: [&str; 5] = ["a", "e", "i", "o", "u"];

fn capitalize(s: &str) -> String {
    let mut c = s.chars();
    match c.next() {
        Some(f) => f.to_uppercase().chain(c).collect(),
        None => String::new(),
    }
}

struct WordMint {
    used: BTreeSet<String>,
}

impl WordMint {
    /// A fresh lowercase consonant-vowel stem that no other word uses.
    fn stem(&mut self, rng: &mut ChaCha8Rng, syllables: usize, suffix: &str) -> String {
        let mut extra = 0;
        loop {
            let mut w = String::new();
            for _ in 0..syllables + extra / 8 {
                w.push_str(ONSETS[rng.gen_range(0..ONSETS.len())]);
                w.push_str(VOWELS[rng.gen_range(0..VOWELS.len())]);
            }
            w.push_str(suffix);
            if self.used.insert(w.clone()) {
                return w;
            }
            extra += 1;
        }
    }

    fn words(&mut self, rng: &mut ChaCha8Rng, n: usize, suffix: &str, cap: bool) -> Vec<String> {
        (0..n)
            .map(|_| {
                let w = self.stem(rng, 2, suffix);
                if cap {
                    capitalize(&w)
                } else {
                    w
                }
            })
            .collect()
    }
}

fn suffixes_for(index: usize) -> Vec<String> {
    match SUFFIXES.get(index) {
        Some(s) => s.iter().map(|s| s.to_string()).collect(),
        None => vec![format!("x{index}q"), format!("q{index}x")],
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
enum PhraseClass {
    Plain,
    Ambiguous,
    Shared,
    Dropped,
}

struct TypeInventory {
    name: String,
    left: Vec<String>,
    right: Vec<String>,
    phrases: BTreeMap<PhraseClass, Vec<Vec<String>>>,
    partner: Option<usize>,
}

impl TypeInventory {
    fn class(&self, c: PhraseClass) -> &[Vec<String>] {
        self.phrases.get(&c).map_or(&[], Vec::as_slice)
    }
}

struct Plan {
    inventory: Vec<TypeInventory>,
    fillers: Vec<String>,
    capitalized: Vec<String>,
    dictionary: Dictionary,
}

#[derive(Clone, Copy, Debug, Default)]
struct Budget {
    tp: usize,
    fp: usize,
    fn_: usize,
}

/// One planted phrase occurrence. `gold` indexes the type whose context and
/// gold label the occurrence carries; `None` is a non-entity context.
struct Event {
    phrase: Vec<String>,
    gold: Option<usize>,
}

fn build_plan(cfg: &SynthConfig, rng: &mut ChaCha8Rng) -> Plan {
    let mut mint = WordMint {
        used: BTreeSet::new(),
    };
    let fillers = mint.words(rng, cfg.filler_vocab, "", false);
    let capitalized = mint.words(rng, cfg.capitalized_vocab, "", true);
    let n_types = cfg.types.len();
    let mut inventory = Vec::with_capacity(n_types);
    for (t, name) in cfg.types.iter().enumerate() {
        let left = mint.words(rng, cfg.triggers_per_type, "", false);
        let right = mint.words(rng, cfg.triggers_per_type, "", false);
        let suffixes = suffixes_for(t);
        let mut gold: Vec<Vec<String>> = (0..cfg.phrases_per_type)
            .map(|_| {
                let len = match rng.gen_range(0..10) {
                    0..=3 => 1,
                    4..=7 => 2,
                    _ => 3,
                };
                (0..len)
                    .map(|_| {
                        let suffix = &suffixes[rng.gen_range(0..suffixes.len())];
                        capitalize(&mint.stem(rng, 1, suffix))
                    })
                    .collect()
            })
            .collect();
        let total = gold.len();
        let dropped_n = (libm::round(cfg.fn_rate * total as f64) as usize).min(total - 2);
        let dropped_n = if cfg.fn_rate > 0.0 { dropped_n.max(1) } else { 0 };
        let dropped = gold.split_off(total - dropped_n);
        let kept_n = gold.len();
        let noisy = cfg.noise_rate_for(name) > 0.0;
        let mut amb_n = libm::round(cfg.ambiguity_rate * kept_n as f64) as usize;
        if noisy && cfg.ambiguity_rate > 0.0 {
            amb_n = amb_n.max(1);
        }
        let amb_n = amb_n.min(kept_n);
        let mut ambiguous = gold.split_off(kept_n - amb_n);
        let shared_n = if n_types > 1 {
            let s = libm::round(cfg.cross_type_rate * amb_n as f64) as usize;
            s.min(amb_n.saturating_sub(1))
        } else {
            0
        };
        let shared = ambiguous.split_off(amb_n - shared_n);
        let mut phrases = BTreeMap::new();
        phrases.insert(PhraseClass::Plain, gold);
        phrases.insert(PhraseClass::Ambiguous, ambiguous);
        phrases.insert(PhraseClass::Shared, shared);
        phrases.insert(PhraseClass::Dropped, dropped);
        inventory.push(TypeInventory {
            name: name.clone(),
            left,
            right,
            phrases,
            partner: (n_types > 1).then_some((t + 1) % n_types),
        });
    }
    let mut dictionary = Dictionary::new();
    for inv in &inventory {
        for class in [PhraseClass::Plain, PhraseClass::Ambiguous, PhraseClass::Shared] {
            for p in inv.class(class) {
                dictionary.insert(&inv.name, p.clone()).expect("non-empty phrase");
            }
        }
        if let Some(u) = inv.partner {
            for p in inv.class(PhraseClass::Shared) {
                dictionary
                    .insert(&inventory[u].name, p.clone())
                    .expect("non-empty phrase");
            }
        }
    }
    Plan {
        inventory,
        fillers,
        capitalized,
        dictionary,
    }
}

fn budgets(cfg: &SynthConfig, n: usize) -> Vec<Budget> {
    cfg.types
        .iter()
        .map(|ty| {
            let fp = libm::round(n as f64 * cfg.noise_rate_for(ty)) as usize;
            let tp = n - fp;
            let fn_ = libm::round(tp as f64 * cfg.fn_rate / (1.0 - cfg.fn_rate)) as usize;
            Budget { tp, fp, fn_ }
        })
        .collect()
}

/// Picks an option with probability proportional to its weight.
fn weighted<T: Copy>(rng: &mut ChaCha8Rng, options: &[(T, usize)]) -> T {
    let total: usize = options.iter().map(|o| o.1).sum();
    let mut draw = rng.gen_range(0..total);
    for &(item, w) in options {
        if draw < w {
            return item;
        }
        draw -= w;
    }
    unreachable!("draw below total weight")
}

fn pick<'a>(rng: &mut ChaCha8Rng, items: &'a [Vec<String>]) -> &'a Vec<String> {
    &items[rng.gen_range(0..items.len())]
}

/// Draws events until every budget is spent. Each event decrements the
/// budgets of all types whose dictionary lists the phrase.
fn plan_events(plan: &Plan, mut budget: Vec<Budget>, rng: &mut ChaCha8Rng) -> Vec<Event> {
    use PhraseClass::*;
    let inv = &plan.inventory;
    // Shared phrases of type `v` are also listed under `partner(v)`.
    let predecessor = |t: usize| inv.iter().position(|i| i.partner == Some(t));
    let mut events = Vec::new();
    loop {
        let remaining: usize = budget.iter().map(|b| b.tp + b.fp + b.fn_).sum();
        if remaining == 0 {
            break;
        }
        let mut draw = rng.gen_range(0..remaining);
        let mut need = None;
        for (t, b) in budget.iter().enumerate() {
            for (kind, count) in [(0u8, b.tp), (1, b.fp), (2, b.fn_)] {
                if need.is_none() {
                    if draw < count {
                        need = Some((t, kind));
                    } else {
                        draw -= count;
                    }
                }
            }
        }
        let (t, kind) = need.expect("remaining > 0");
        let partner_fp = |budget: &[Budget]| inv[t].partner.is_some_and(|u| budget[u].fp > 0);
        let event = match kind {
            0 => {
                let mut options = vec![
                    (Plain, inv[t].class(Plain).len()),
                    (Ambiguous, inv[t].class(Ambiguous).len()),
                ];
                if partner_fp(&budget) {
                    options.push((Shared, inv[t].class(Shared).len()));
                }
                let class = weighted(rng, &options);
                budget[t].tp -= 1;
                if class == Shared {
                    budget[inv[t].partner.unwrap()].fp -= 1;
                }
                Event {
                    phrase: pick(rng, inv[t].class(class)).clone(),
                    gold: Some(t),
                }
            }
            1 => {
                // 0: own ambiguous phrase as a non-entity
                // 1: own shared phrase as a non-entity (also noise for the partner)
                // 2: predecessor's shared phrase as a predecessor mention
                let mut options = vec![(0u8, inv[t].class(Ambiguous).len())];
                if partner_fp(&budget) {
                    options.push((1, inv[t].class(Shared).len()));
                }
                if let Some(v) = predecessor(t) {
                    if v != t && budget[v].tp > 0 {
                        options.push((2, inv[v].class(Shared).len()));
                    }
                }
                let choice = weighted(rng, &options);
                budget[t].fp -= 1;
                match choice {
                    0 => Event {
                        phrase: pick(rng, inv[t].class(Ambiguous)).clone(),
                        gold: None,
                    },
                    1 => {
                        budget[inv[t].partner.unwrap()].fp -= 1;
                        Event {
                            phrase: pick(rng, inv[t].class(Shared)).clone(),
                            gold: None,
                        }
                    }
                    _ => {
                        let v = predecessor(t).unwrap();
                        budget[v].tp -= 1;
                        Event {
                            phrase: pick(rng, inv[v].class(Shared)).clone(),
                            gold: Some(v),
                        }
                    }
                }
            }
            _ => {
                budget[t].fn_ -= 1;
                Event {
                    phrase: pick(rng, inv[t].class(Dropped)).clone(),
                    gold: Some(t),
                }
            }
        };
        events.push(event);
    }
    events
}

fn filler_run(plan: &Plan, rng: &mut ChaCha8Rng, out: &mut Vec<String>, caps: bool) {
    let n = rng.gen_range(1..=3);
    for _ in 0..n {
        out.push(plan.fillers[rng.gen_range(0..plan.fillers.len())].clone());
    }
    if caps && !plan.capitalized.is_empty() {
        for _ in 0..rng.gen_range(1..=2) {
            out.push(plan.capitalized[rng.gen_range(0..plan.capitalized.len())].clone());
        }
        out.push(plan.fillers[rng.gen_range(0..plan.fillers.len())].clone());
    }
}

fn assemble(
    cfg: &SynthConfig,
    plan: &Plan,
    mut events: Vec<Event>,
    doc_prefix: &str,
    rng: &mut ChaCha8Rng,
) -> Corpus {
    events.shuffle(rng);
    let mut sentences = Vec::new();
    let mut rest = events.as_slice();
    while !rest.is_empty() {
        let take = rng.gen_range(1..=cfg.max_mentions_per_sentence).min(rest.len());
        let (now, later) = rest.split_at(take);
        rest = later;
        let caps_slot = if rng.gen_bool(cfg.capitalized_rate) {
            Some(rng.gen_range(0..=take))
        } else {
            None
        };
        let mut tokens = Vec::new();
        let mut gold = Vec::new();
        filler_run(plan, rng, &mut tokens, caps_slot == Some(0));
        for (k, ev) in now.iter().enumerate() {
            let (left, right) = match ev.gold {
                Some(t) => {
                    let inv = &plan.inventory[t];
                    (
                        inv.left[rng.gen_range(0..inv.left.len())].clone(),
                        inv.right[rng.gen_range(0..inv.right.len())].clone(),
                    )
                }
                None => (
                    plan.fillers[rng.gen_range(0..plan.fillers.len())].clone(),
                    plan.fillers[rng.gen_range(0..plan.fillers.len())].clone(),
                ),
            };
            tokens.push(left);
            let start = tokens.len();
            tokens.extend(ev.phrase.iter().cloned());
            if let Some(t) = ev.gold {
                gold.push(Mention {
                    span: Span::new(start, tokens.len()),
                    label: plan.inventory[t].name.clone(),
                });
            }
            tokens.push(right);
            filler_run(plan, rng, &mut tokens, caps_slot == Some(k + 1));
        }
        let idx = sentences.len();
        let doc = format!("{doc_prefix}-{:04}", idx / cfg.sentences_per_doc);
        let sent = format!("{}", idx % cfg.sentences_per_doc);
        let sentence = Sentence::new(doc, sent, tokens)
            .and_then(|s| s.with_gold(gold))
            .expect("generated sentences are well formed");
        sentences.push(sentence);
    }
    Corpus::new(sentences)
}

/// Generates a training split, a development split and a dictionary.
/// Identical configs and seeds give identical outputs.
pub fn generate(cfg: &SynthConfig, seed: u64) -> Result<SynthOutput, SynthError> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let plan = build_plan(cfg, &mut rng);
    let train_events = plan_events(&plan, budgets(cfg, cfg.instances_per_type), &mut rng);
    let train = assemble(cfg, &plan, train_events, "train", &mut rng);
    let dev_n = libm::round(cfg.instances_per_type as f64 * cfg.dev_fraction) as usize;
    let dev = if dev_n > 0 {
        let dev_events = plan_events(&plan, budgets(cfg, dev_n), &mut rng);
        assemble(cfg, &plan, dev_events, "dev", &mut rng)
    } else {
        Corpus::default()
    };
    Ok(SynthOutput {
        train,
        dev,
        dictionary: plan.dictionary,
    })
}
