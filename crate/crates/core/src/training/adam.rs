use alloc::vec;
use alloc::vec::Vec;

use crate::math;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AdamConfig {
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, thiserror::Error)]
#[error("non-finite gradient in tensor {tensor}; update skipped")]
pub struct NonFiniteGradient {
    pub tensor: usize,
}

/// First and second moment estimates, one buffer per parameter tensor.
#[derive(Clone, Debug, PartialEq)]
pub struct AdamState {
    pub config: AdamConfig,
    pub m: Vec<Vec<f64>>,
    pub v: Vec<Vec<f64>>,
    pub step: u64,
}

impl AdamState {
    pub fn new(shapes: impl IntoIterator<Item = usize>, config: AdamConfig) -> Self {
        let m: Vec<Vec<f64>> = shapes.into_iter().map(|n| vec![0.0; n]).collect();
        AdamState {
            config,
            v: m.clone(),
            m,
            step: 0,
        }
    }

    /// One bias-corrected Adam update. Nothing is touched when any gradient
    /// is non-finite.
    pub fn step(&mut self, params: Vec<&mut [f64]>, grads: &[Vec<f64>], lr: f64) -> Result<(), NonFiniteGradient> {
        assert_eq!(params.len(), grads.len(), "parameter and gradient lists differ");
        assert_eq!(params.len(), self.m.len(), "optimizer state does not match parameters");
        if let Some(tensor) = grads.iter().position(|g| !g.iter().all(|x| x.is_finite())) {
            return Err(NonFiniteGradient { tensor });
        }
        self.step += 1;
        let AdamConfig {
            beta1,
            beta2,
            epsilon,
        } = self.config;
        let t = self.step as f64;
        let bc1 = 1.0 - libm::pow(beta1, t);
        let bc2 = 1.0 - libm::pow(beta2, t);
        for (((p, g), m), v) in params.into_iter().zip(grads).zip(&mut self.m).zip(&mut self.v) {
            assert_eq!(p.len(), g.len());
            for i in 0..p.len() {
                m[i] = beta1 * m[i] + (1.0 - beta1) * g[i];
                v[i] = beta2 * v[i] + (1.0 - beta2) * g[i] * g[i];
                let m_hat = m[i] / bc1;
                let v_hat = v[i] / bc2;
                p[i] -= lr * m_hat / (math::sqrt(v_hat) + epsilon);
            }
        }
        Ok(())
    }
}
