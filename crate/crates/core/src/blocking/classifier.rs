use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::math::sigmoid;
use crate::training::{soft_bce, AdamConfig, AdamState};

#[derive(Clone, Debug, PartialEq)]
pub struct ClassifierConfig {
    pub dim: usize,
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
}

impl Default for ClassifierConfig {
    fn default() -> Self {
        ClassifierConfig {
            dim: 16,
            epochs: 30,
            batch_size: 32,
            learning_rate: 1e-2,
        }
    }
}

/// Character class pattern of a token with repeats collapsed, e.g. `Xx`.
fn shape(token: &str) -> String {
    let mut out = String::new();
    for c in token.chars() {
        let k = if c.is_uppercase() {
            'X'
        } else if c.is_lowercase() {
            'x'
        } else if c.is_ascii_digit() {
            'd'
        } else {
            c
        };
        if !out.ends_with(k) {
            out.push(k);
        }
    }
    out
}

/// Feature strings of a context-free phrase.
pub fn phrase_features(phrase: &[String]) -> Vec<String> {
    let mut out = Vec::with_capacity(phrase.len() * 5 + 2);
    out.push(format!("len={}", phrase.len().min(6)));
    let shapes: Vec<String> = phrase.iter().map(|t| shape(t)).collect();
    out.push(format!("shape={}", shapes.join("_")));
    for (t, s) in phrase.iter().zip(&shapes) {
        out.push(format!("w={t}"));
        out.push(format!("s={s}"));
        let lower: Vec<char> = t.to_lowercase().chars().collect();
        for n in 2..=4 {
            if lower.len() > n {
                let suffix: String = lower[lower.len() - n..].iter().collect();
                out.push(format!("x{n}={suffix}"));
            }
        }
    }
    out
}

/// Mean-pooled feature embeddings followed by an affine sigmoid head.
#[derive(Clone, Debug, PartialEq)]
pub struct PhraseClassifier {
    features: BTreeMap<String, usize>,
    dim: usize,
    embeddings: Vec<f64>,
    head: Vec<f64>,
    bias: Vec<f64>,
}

impl PhraseClassifier {
    fn new(features: BTreeMap<String, usize>, dim: usize, rng: &mut ChaCha8Rng) -> Self {
        let scale = 1.0 / libm::sqrt(dim as f64);
        let mut draw = |n: usize| (0..n).map(|_| rng.gen_range(-scale..scale)).collect::<Vec<f64>>();
        let embeddings = draw(features.len() * dim);
        let head = draw(dim);
        PhraseClassifier {
            features,
            dim,
            embeddings,
            head,
            bias: vec![0.0],
        }
    }

    fn ids(&self, phrase: &[String]) -> Vec<usize> {
        phrase_features(phrase)
            .iter()
            .filter_map(|f| self.features.get(f).copied())
            .collect()
    }

    fn pooled(&self, ids: &[usize]) -> Vec<f64> {
        let mut r = vec![0.0; self.dim];
        if ids.is_empty() {
            return r;
        }
        for &id in ids {
            for (a, e) in r.iter_mut().zip(&self.embeddings[id * self.dim..(id + 1) * self.dim]) {
                *a += e;
            }
        }
        let n = ids.len() as f64;
        r.iter_mut().for_each(|a| *a /= n);
        r
    }

    fn logit(&self, pooled: &[f64]) -> f64 {
        pooled.iter().zip(&self.head).map(|(a, b)| a * b).sum::<f64>() + self.bias[0]
    }

    /// Probability that `phrase` is a mention of the classifier's type.
    /// Features never seen in training are ignored.
    pub fn score(&self, phrase: &[String]) -> f64 {
        sigmoid(self.logit(&self.pooled(&self.ids(phrase))))
    }

    pub fn feature_count(&self) -> usize {
        self.features.len()
    }
}

/// Trains on labelled phrases with binary cross-entropy and Adam.
pub(super) fn fit(
    examples: &[(Vec<String>, bool)],
    config: &ClassifierConfig,
    rng: &mut ChaCha8Rng,
) -> PhraseClassifier {
    let mut features = BTreeMap::new();
    for (p, _) in examples {
        for f in phrase_features(p) {
            let next = features.len();
            features.entry(f).or_insert(next);
        }
    }
    let mut model = PhraseClassifier::new(features, config.dim, rng);
    let encoded: Vec<(Vec<usize>, f64)> = examples
        .iter()
        .map(|(p, y)| (model.ids(p), if *y { 1.0 } else { 0.0 }))
        .collect();
    let shapes = [model.embeddings.len(), model.dim, 1];
    let mut adam = AdamState::new(shapes, AdamConfig::default());
    let mut order: Vec<usize> = (0..encoded.len()).collect();
    let d = model.dim;
    for _ in 0..config.epochs {
        order.shuffle(rng);
        for batch in order.chunks(config.batch_size.max(1)) {
            let pooled: Vec<Vec<f64>> = batch.iter().map(|&i| model.pooled(&encoded[i].0)).collect();
            let f: Vec<f64> = pooled.iter().map(|r| sigmoid(model.logit(r))).collect();
            let y: Vec<f64> = batch.iter().map(|&i| encoded[i].1).collect();
            let out = soft_bce(&f, &y);
            let mut g_emb = vec![0.0; model.embeddings.len()];
            let mut g_head = vec![0.0; d];
            let mut g_bias = vec![0.0];
            for (k, &i) in batch.iter().enumerate() {
                // d loss / d logit through the sigmoid.
                let g = out.grads[k] * f[k] * (1.0 - f[k]);
                g_bias[0] += g;
                for (gh, r) in g_head.iter_mut().zip(&pooled[k]) {
                    *gh += g * r;
                }
                let ids = &encoded[i].0;
                let share = g / ids.len().max(1) as f64;
                for &id in ids {
                    for (ge, h) in g_emb[id * d..(id + 1) * d].iter_mut().zip(&model.head) {
                        *ge += share * h;
                    }
                }
            }
            let grads = [g_emb, g_head, g_bias];
            adam.step(
                vec![&mut model.embeddings[..], &mut model.head[..], &mut model.bias[..]],
                &grads,
                config.learning_rate,
            )
            .expect("classifier gradients are finite");
        }
    }
    model
}
