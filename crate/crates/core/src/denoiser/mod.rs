//! Per-type confidence model.
//!
//! A candidate mention is wrapped in `[BEG]`/`[END]` markers, every token is
//! mapped to an embedding `h_k`, and the window from `[BEG]` to `[END]`
//! (markers included) is pooled by softmax attention:
//!
//! ```text
//! alpha_k = exp(w . h_k + b) / sum_j exp(w . h_j + b)
//! r       = sum_k alpha_k h_k
//! f(x)    = sigmoid(MLP(r))
//! ```
//!
//! The MLP has softplus hidden layers and a linear scalar output. Gradients
//! are computed by hand in [`DenoiserModel::backward`].

mod vocab;

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::slice;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::corpus::{Corpus, Instance, Span};
use crate::math;

pub use vocab::{Vocab, BEG, BEG_TOKEN, END, END_TOKEN, OOV, OOV_TOKEN};

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum DenoiserError {
    #[error("non-finite value in the forward pass")]
    NonFinite,
    #[error("cache was computed for parameter version {cache}, model is at {model}")]
    StaleCache { cache: u64, model: u64 },
    #[error("malformed model: {0}")]
    Shape(String),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DenoiserConfig {
    pub dim: usize,
    /// Widths of the hidden layers; the output layer (width 1) is implicit.
    pub hidden: Vec<usize>,
    /// Average each embedding with its left and right neighbours.
    pub context_window: bool,
}

impl Default for DenoiserConfig {
    fn default() -> Self {
        DenoiserConfig {
            dim: 16,
            hidden: vec![16],
            context_window: false,
        }
    }
}

impl DenoiserConfig {
    pub fn with_dim(dim: usize) -> Self {
        DenoiserConfig {
            dim,
            hidden: vec![dim],
            context_window: false,
        }
    }
}

/// `outputs x inputs` weight matrix (row-major) and bias.
#[derive(Clone, Debug, PartialEq)]
pub struct Affine {
    pub inputs: usize,
    pub outputs: usize,
    pub weight: Vec<f64>,
    pub bias: Vec<f64>,
}

impl Affine {
    fn init(inputs: usize, outputs: usize, rng: &mut ChaCha8Rng) -> Self {
        let bound = 1.0 / math::sqrt(inputs as f64);
        Affine {
            inputs,
            outputs,
            weight: (0..inputs * outputs)
                .map(|_| rng.gen_range(-bound..=bound))
                .collect(),
            bias: vec![0.0; outputs],
        }
    }

    fn apply(&self, x: &[f64], out: &mut Vec<f64>) {
        out.clear();
        for o in 0..self.outputs {
            let row = &self.weight[o * self.inputs..(o + 1) * self.inputs];
            out.push(self.bias[o] + row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>());
        }
    }
}

/// A sentence with span markers inserted, as vocabulary ids.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MarkedInstance {
    pub ids: Vec<u32>,
    pub beg: usize,
    pub end: usize,
}

impl MarkedInstance {
    /// Positions from `[BEG]` to `[END]` inclusive.
    pub fn window(&self) -> core::ops::RangeInclusive<usize> {
        self.beg..=self.end
    }
}

/// Activations kept for the backward pass.
#[derive(Clone, Debug)]
pub struct Cache {
    version: u64,
    ids: Vec<u32>,
    beg: usize,
    end: usize,
    h: Vec<Vec<f64>>,
    alpha: Vec<f64>,
    /// Input to each affine layer; `inputs[0]` is `r`.
    inputs: Vec<Vec<f64>>,
    /// Pre-activations of each affine layer.
    pre: Vec<Vec<f64>>,
    confidence: f64,
}

impl Cache {
    pub fn confidence(&self) -> f64 {
        self.confidence
    }

    pub fn alpha(&self) -> &[f64] {
        &self.alpha
    }

    pub fn pooled(&self) -> &[f64] {
        &self.inputs[0]
    }
}

/// Gradients laid out exactly like [`DenoiserModel::tensors`].
#[derive(Clone, Debug, PartialEq)]
pub struct GradientSet {
    pub tensors: Vec<Vec<f64>>,
}

impl GradientSet {
    pub fn zeros_like(model: &DenoiserModel) -> Self {
        GradientSet {
            tensors: model.tensors().iter().map(|t| vec![0.0; t.len()]).collect(),
        }
    }

    pub fn scale(&mut self, factor: f64) {
        for t in &mut self.tensors {
            for g in t.iter_mut() {
                *g *= factor;
            }
        }
    }

    pub fn add_scaled(&mut self, other: &GradientSet, factor: f64) {
        for (a, b) in self.tensors.iter_mut().zip(&other.tensors) {
            for (x, y) in a.iter_mut().zip(b) {
                *x += factor * y;
            }
        }
    }

    pub fn is_finite(&self) -> bool {
        self.tensors.iter().flatten().all(|g| g.is_finite())
    }

    pub fn is_zero(&self) -> bool {
        self.tensors.iter().flatten().all(|&g| g == 0.0)
    }
}

/// Index of the embedding tensor in [`DenoiserModel::tensors`].
pub const EMBEDDINGS: usize = 0;
pub const ATTN_W: usize = 1;
pub const ATTN_B: usize = 2;

#[derive(Clone, Debug)]
pub struct DenoiserModel {
    entity_type: String,
    vocab: Vocab,
    dim: usize,
    context_window: bool,
    embeddings: Vec<f64>,
    attn_w: Vec<f64>,
    attn_b: f64,
    layers: Vec<Affine>,
    version: u64,
}

impl PartialEq for DenoiserModel {
    fn eq(&self, other: &Self) -> bool {
        self.entity_type == other.entity_type
            && self.vocab == other.vocab
            && self.dim == other.dim
            && self.context_window == other.context_window
            && self.embeddings == other.embeddings
            && self.attn_w == other.attn_w
            && self.attn_b == other.attn_b
            && self.layers == other.layers
    }
}

impl DenoiserModel {
    /// Seeded initialisation: embeddings uniform in [-0.1, 0.1], affine
    /// weights uniform in +-1/sqrt(fan_in), biases zero.
    pub fn new(entity_type: &str, vocab: Vocab, config: &DenoiserConfig, seed: u64) -> Result<Self, DenoiserError> {
        if config.dim == 0 || config.hidden.contains(&0) {
            return Err(DenoiserError::Shape("dimensions must be positive".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let d = config.dim;
        let embeddings = (0..vocab.len() * d).map(|_| rng.gen_range(-0.1..=0.1)).collect();
        let bound = 1.0 / math::sqrt(d as f64);
        let attn_w = (0..d).map(|_| rng.gen_range(-bound..=bound)).collect();
        let mut layers = Vec::new();
        let mut width = d;
        for &h in config.hidden.iter().chain([1usize].iter()) {
            layers.push(Affine::init(width, h, &mut rng));
            width = h;
        }
        Ok(DenoiserModel {
            entity_type: entity_type.into(),
            vocab,
            dim: d,
            context_window: config.context_window,
            embeddings,
            attn_w,
            attn_b: 0.0,
            layers,
            version: 0,
        })
    }

    /// Reassembles a model from stored parameters, checking every shape.
    pub fn from_parts(
        entity_type: String,
        vocab: Vocab,
        dim: usize,
        context_window: bool,
        embeddings: Vec<f64>,
        attn_w: Vec<f64>,
        attn_b: f64,
        layers: Vec<Affine>,
    ) -> Result<Self, DenoiserError> {
        let shape = |m: &str| Err(DenoiserError::Shape(m.into()));
        if dim == 0 {
            return shape("dim must be positive");
        }
        if embeddings.len() != vocab.len() * dim {
            return shape("embedding table does not match vocab x dim");
        }
        if attn_w.len() != dim {
            return shape("attention vector does not match dim");
        }
        let mut width = dim;
        for l in &layers {
            if l.inputs != width || l.weight.len() != l.inputs * l.outputs || l.bias.len() != l.outputs || l.outputs == 0 {
                return shape("affine layer shapes do not chain");
            }
            width = l.outputs;
        }
        if layers.is_empty() || width != 1 {
            return shape("output layer must have width 1");
        }
        let model = DenoiserModel {
            entity_type,
            vocab,
            dim,
            context_window,
            embeddings,
            attn_w,
            attn_b,
            layers,
            version: 0,
        };
        if !model.tensors().iter().all(|t| t.iter().all(|v| v.is_finite())) {
            return Err(DenoiserError::NonFinite);
        }
        Ok(model)
    }

    pub fn entity_type(&self) -> &str {
        &self.entity_type
    }

    pub fn vocab(&self) -> &Vocab {
        &self.vocab
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn context_window(&self) -> bool {
        self.context_window
    }

    pub fn layers(&self) -> &[Affine] {
        &self.layers
    }

    pub fn attn_bias(&self) -> f64 {
        self.attn_b
    }

    /// Bumped on every mutable access to the parameters.
    pub fn version(&self) -> u64 {
        self.version
    }

    pub fn embedding(&self, id: u32) -> &[f64] {
        let i = id as usize * self.dim;
        &self.embeddings[i..i + self.dim]
    }

    /// Parameter tensors in a fixed order: embeddings, attention vector,
    /// attention bias, then weight and bias of every affine layer.
    pub fn tensors(&self) -> Vec<&[f64]> {
        let mut out: Vec<&[f64]> = vec![&self.embeddings, &self.attn_w, slice::from_ref(&self.attn_b)];
        for l in &self.layers {
            out.push(&l.weight);
            out.push(&l.bias);
        }
        out
    }

    pub fn tensors_mut(&mut self) -> Vec<&mut [f64]> {
        self.version += 1;
        let mut out: Vec<&mut [f64]> = vec![
            &mut self.embeddings,
            &mut self.attn_w,
            slice::from_mut(&mut self.attn_b),
        ];
        for l in &mut self.layers {
            out.push(&mut l.weight);
            out.push(&mut l.bias);
        }
        out
    }

    pub fn parameter_count(&self) -> usize {
        self.tensors().iter().map(|t| t.len()).sum()
    }

    /// Inserts `[BEG]` before the span and `[END]` after it.
    pub fn mark(&self, tokens: &[String], span: Span) -> MarkedInstance {
        debug_assert!(span.fits(tokens.len()));
        let mut ids = Vec::with_capacity(tokens.len() + 2);
        ids.extend(tokens[..span.start].iter().map(|t| self.vocab.id(t)));
        ids.push(BEG);
        ids.extend(tokens[span.start..span.end].iter().map(|t| self.vocab.id(t)));
        ids.push(END);
        ids.extend(tokens[span.end..].iter().map(|t| self.vocab.id(t)));
        MarkedInstance {
            ids,
            beg: span.start,
            end: span.end + 1,
        }
    }

    pub fn mark_instance(&self, corpus: &Corpus, inst: &Instance) -> MarkedInstance {
        self.mark(&corpus.sentences[inst.sentence].tokens, inst.span)
    }

    /// Sequence positions whose embeddings are averaged into `h` at `pos`.
    fn sources(&self, len: usize, pos: usize) -> core::ops::Range<usize> {
        if self.context_window {
            pos.saturating_sub(1)..(pos + 2).min(len)
        } else {
            pos..pos + 1
        }
    }

    fn encode(&self, m: &MarkedInstance, pos: usize) -> Vec<f64> {
        let src = self.sources(m.ids.len(), pos);
        let scale = 1.0 / src.len() as f64;
        let mut h = vec![0.0; self.dim];
        for p in src {
            for (a, e) in h.iter_mut().zip(self.embedding(m.ids[p])) {
                *a += e;
            }
        }
        for a in &mut h {
            *a *= scale;
        }
        h
    }

    /// Confidence that the marked instance is a correct mention, with the
    /// activations needed by [`backward`](Self::backward).
    pub fn forward(&self, m: &MarkedInstance) -> Result<Cache, DenoiserError> {
        let h: Vec<Vec<f64>> = m.window().map(|p| self.encode(m, p)).collect();
        let logits: Vec<f64> = h
            .iter()
            .map(|hk| self.attn_b + hk.iter().zip(&self.attn_w).map(|(a, b)| a * b).sum::<f64>())
            .collect();
        let top = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut alpha: Vec<f64> = logits.iter().map(|s| math::exp(s - top)).collect();
        let z: f64 = alpha.iter().sum();
        for a in &mut alpha {
            *a /= z;
        }
        let mut r = vec![0.0; self.dim];
        for (a, hk) in alpha.iter().zip(&h) {
            for (ri, hi) in r.iter_mut().zip(hk) {
                *ri += a * hi;
            }
        }
        let mut inputs = vec![r];
        let mut pre = Vec::with_capacity(self.layers.len());
        for (li, layer) in self.layers.iter().enumerate() {
            let mut out = Vec::with_capacity(layer.outputs);
            layer.apply(&inputs[li], &mut out);
            if li + 1 < self.layers.len() {
                inputs.push(out.iter().map(|&x| math::softplus(x)).collect());
            }
            pre.push(out);
        }
        let logit = pre.last().expect("at least one layer")[0];
        if !logit.is_finite() || !inputs[0].iter().all(|v| v.is_finite()) {
            return Err(DenoiserError::NonFinite);
        }
        Ok(Cache {
            version: self.version,
            ids: m.ids.clone(),
            beg: m.beg,
            end: m.end,
            h,
            alpha,
            inputs,
            pre,
            confidence: math::sigmoid(logit),
        })
    }

    pub fn confidence(&self, m: &MarkedInstance) -> Result<f64, DenoiserError> {
        self.forward(m).map(|c| c.confidence)
    }

    /// Gradients of a loss with `d loss / d f = upstream`.
    pub fn backward(&self, cache: &Cache, upstream: f64) -> Result<GradientSet, DenoiserError> {
        let mut grads = GradientSet::zeros_like(self);
        self.accumulate_backward(cache, upstream, &mut grads)?;
        Ok(grads)
    }

    /// Like [`backward`](Self::backward) but adds into an existing set.
    pub fn accumulate_backward(
        &self,
        cache: &Cache,
        upstream: f64,
        grads: &mut GradientSet,
    ) -> Result<(), DenoiserError> {
        if cache.version != self.version {
            return Err(DenoiserError::StaleCache {
                cache: cache.version,
                model: self.version,
            });
        }
        if upstream == 0.0 {
            return Ok(());
        }
        let d = self.dim;
        let f = cache.confidence;
        let mut delta = vec![upstream * f * (1.0 - f)];
        let n_layers = self.layers.len();
        for li in (0..n_layers).rev() {
            let layer = &self.layers[li];
            let input = &cache.inputs[li];
            let (gw, gb) = (3 + 2 * li, 4 + 2 * li);
            for o in 0..layer.outputs {
                grads.tensors[gb][o] += delta[o];
                let row = &mut grads.tensors[gw][o * layer.inputs..(o + 1) * layer.inputs];
                for (g, x) in row.iter_mut().zip(input) {
                    *g += delta[o] * x;
                }
            }
            let mut below = vec![0.0; layer.inputs];
            for o in 0..layer.outputs {
                let row = &layer.weight[o * layer.inputs..(o + 1) * layer.inputs];
                for (b, w) in below.iter_mut().zip(row) {
                    *b += delta[o] * w;
                }
            }
            if li > 0 {
                for (b, &z) in below.iter_mut().zip(&cache.pre[li - 1]) {
                    *b *= math::sigmoid(z);
                }
            }
            delta = below;
        }
        let dr = delta;

        // r = sum_k alpha_k h_k, alpha = softmax(w . h_k + b)
        let dalpha: Vec<f64> = cache
            .h
            .iter()
            .map(|hk| hk.iter().zip(&dr).map(|(a, b)| a * b).sum())
            .collect();
        let mean: f64 = cache.alpha.iter().zip(&dalpha).map(|(a, g)| a * g).sum();
        let len = cache.ids.len();
        for (k, pos) in (cache.beg..=cache.end).enumerate() {
            let ds = cache.alpha[k] * (dalpha[k] - mean);
            grads.tensors[ATTN_B][0] += ds;
            for (g, hv) in grads.tensors[ATTN_W].iter_mut().zip(&cache.h[k]) {
                *g += ds * hv;
            }
            let dh: Vec<f64> = (0..d)
                .map(|i| cache.alpha[k] * dr[i] + ds * self.attn_w[i])
                .collect();
            let src = self.sources(len, pos);
            let scale = 1.0 / src.len() as f64;
            for p in src {
                let row = cache.ids[p] as usize * d;
                for (g, v) in grads.tensors[EMBEDDINGS][row..row + d].iter_mut().zip(&dh) {
                    *g += scale * v;
                }
            }
        }
        Ok(())
    }
}
