//! Distribution of the number of correctly labelled instances in a batch.
//!
//! A batch of `B` instances is drawn without replacement from a pool of `N`
//! weakly labelled instances of which `K` are expected to be correct. The
//! count `S` of correct instances in the batch is hypergeometric, and the
//! instance ranked `i` by confidence is treated as correct with weight
//! `P(S >= i)`.

use alloc::vec;
use alloc::vec::Vec;
use core::ops::RangeInclusive;

use crate::accuracy::Accuracy;
use crate::math;

#[derive(Clone, Copy, Debug, PartialEq, Eq, thiserror::Error)]
pub enum HypergeomError {
    #[error("correct count {correct} exceeds population {population}")]
    CorrectExceedsPopulation { population: usize, correct: usize },
    #[error("batch size {batch} exceeds population {population}")]
    BatchExceedsPopulation { population: usize, batch: usize },
    #[error("batch size must be at least 1")]
    EmptyBatch,
}

/// `H(N, K, B)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct HypergeomParams {
    population: usize,
    correct: usize,
    batch: usize,
}

/// Point probabilities `q[k] = P(S = k)` for `k = 0..=B` and tail weights
/// `omega[i - 1] = P(S >= i)` for ranks `i = 1..=B`.
#[derive(Clone, Debug, PartialEq)]
pub struct BatchWeights {
    pub q: Vec<f64>,
    pub omega: Vec<f64>,
}

impl HypergeomParams {
    pub fn new(population: usize, correct: usize, batch: usize) -> Result<Self, HypergeomError> {
        if correct > population {
            return Err(HypergeomError::CorrectExceedsPopulation { population, correct });
        }
        if batch == 0 {
            return Err(HypergeomError::EmptyBatch);
        }
        if batch > population {
            return Err(HypergeomError::BatchExceedsPopulation { population, batch });
        }
        Ok(Self {
            population,
            correct,
            batch,
        })
    }

    /// Parameters with `K = round(N * p)`.
    pub fn from_accuracy(
        population: usize,
        accuracy: Accuracy,
        batch: usize,
    ) -> Result<Self, HypergeomError> {
        Self::new(population, accuracy.expected_correct(population), batch)
    }

    pub fn population(&self) -> usize {
        self.population
    }

    pub fn correct(&self) -> usize {
        self.correct
    }

    pub fn batch(&self) -> usize {
        self.batch
    }

    /// Values of `S` with non-zero probability.
    pub fn support(&self) -> RangeInclusive<usize> {
        let noisy = self.population - self.correct;
        self.batch.saturating_sub(noisy)..=self.batch.min(self.correct)
    }

    /// `E[S] = B K / N`.
    pub fn mean(&self) -> f64 {
        self.batch as f64 * self.correct as f64 / self.population as f64
    }

    /// `P(S = k)`, zero outside the support.
    pub fn pmf(&self, k: usize) -> f64 {
        let support = self.support();
        if !support.contains(&k) {
            return 0.0;
        }
        if support.start() == support.end() {
            return 1.0;
        }
        let ln_p = math::ln_binomial(self.correct, k)
            + math::ln_binomial(self.population - self.correct, self.batch - k)
            - math::ln_binomial(self.population, self.batch);
        math::exp(ln_p)
    }

    pub fn tail_weights(&self) -> BatchWeights {
        let b = self.batch;
        let mut q = vec![0.0; b + 1];
        for k in self.support() {
            q[k] = self.pmf(k);
        }
        let mut omega = vec![0.0; b];
        let mut tail = 0.0;
        for i in (1..=b).rev() {
            tail += q[i];
            omega[i - 1] = tail.min(1.0);
        }
        BatchWeights { q, omega }
    }
}

impl BatchWeights {
    pub fn batch(&self) -> usize {
        self.omega.len()
    }

    /// `sum_i omega_i`, which equals `E[S]`.
    pub fn total_weight(&self) -> f64 {
        self.omega.iter().sum()
    }
}
