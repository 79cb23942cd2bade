//! Batch losses over confidences `f` in rank order. Every loss is the
//! negated mean log-likelihood, so it is minimised, and each returns
//! `d loss / d f_i` for the backward pass.

use alloc::vec::Vec;

use crate::hypergeom::BatchWeights;
use crate::math;

/// Confidences are clamped to `[CLAMP, 1 - CLAMP]` before taking logs.
pub const CLAMP: f64 = 1e-7;

#[derive(Clone, Debug, PartialEq)]
pub struct LossOutput {
    pub loss: f64,
    pub grads: Vec<f64>,
    /// How many confidences hit the clamp.
    pub clamped: usize,
}

fn clamp(f: f64) -> (f64, bool) {
    let c = f.clamp(CLAMP, 1.0 - CLAMP);
    (c, c != f)
}

/// `-(1/B) sum_i [t_i ln f_i + (1 - t_i) ln(1 - f_i)]`.
pub fn soft_bce(f: &[f64], targets: &[f64]) -> LossOutput {
    assert_eq!(f.len(), targets.len());
    let b = f.len() as f64;
    let mut loss = 0.0;
    let mut clamped = 0;
    let mut grads = Vec::with_capacity(f.len());
    for (&fi, &t) in f.iter().zip(targets) {
        let (fi, hit) = clamp(fi);
        clamped += hit as usize;
        let mut term = 0.0;
        if t != 0.0 {
            term += t * math::ln(fi);
        }
        if t != 1.0 {
            term += (1.0 - t) * math::ln(1.0 - fi);
        }
        loss -= term;
        grads.push(-(t / fi - (1.0 - t) / (1.0 - fi)) / b);
    }
    LossOutput {
        loss: loss / b,
        grads,
        clamped,
    }
}

/// Hypergeometric loss: the rank-`i` instance is pulled towards 1 with
/// weight `omega_i` and towards 0 with weight `1 - omega_i`.
pub fn hgl_loss(ranked_f: &[f64], weights: &BatchWeights) -> LossOutput {
    assert_eq!(ranked_f.len(), weights.omega.len(), "batch and weights disagree");
    soft_bce(ranked_f, &weights.omega)
}

/// Plain BCE towards label 1 for every weakly labelled instance.
pub fn naive_loss(f: &[f64]) -> LossOutput {
    soft_bce(f, &alloc::vec![1.0; f.len()])
}

/// Instance-level EM: each instance is pulled towards its own detached
/// confidence `f_t` from a reference parameter snapshot.
pub fn instance_em_loss(f: &[f64], snapshot: &[f64]) -> LossOutput {
    soft_bce(f, snapshot)
}

fn x_ln_x_over_y(x: f64, y: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        x * math::ln(x / y)
    }
}

/// Expectation regularisation: `KL(Bern(p) || Bern(mean f))`.
pub fn xr_loss(f: &[f64], accuracy: f64) -> LossOutput {
    assert!(!f.is_empty());
    let b = f.len() as f64;
    let mean = f.iter().sum::<f64>() / b;
    let (q, hit) = clamp(mean);
    let p = accuracy;
    let loss = x_ln_x_over_y(p, q) + x_ln_x_over_y(1.0 - p, 1.0 - q);
    let dq = -p / q + (1.0 - p) / (1.0 - q);
    LossOutput {
        loss,
        grads: alloc::vec![dq / b; f.len()],
        clamped: hit as usize,
    }
}
