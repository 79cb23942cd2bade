//! Dataset accuracy `p` (one minus the noise rate), kept on the 5% grid.

use core::fmt;

/// An accuracy on the grid {0.00, 0.05, ..., 1.00}, stored in twentieths so
/// that `round(N * p)` is computed in exact integer arithmetic.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Accuracy(u8);

#[derive(Clone, Copy, Debug, PartialEq, thiserror::Error)]
pub enum AccuracyError {
    #[error("accuracy {0} is outside [0, 1]")]
    OutOfRange(f64),
    #[error("accuracy needs at least one observation")]
    NoObservations,
}

impl Accuracy {
    pub const ZERO: Accuracy = Accuracy(0);
    pub const ONE: Accuracy = Accuracy(20);

    pub fn from_twentieths(t: u8) -> Option<Self> {
        (t <= 20).then_some(Accuracy(t))
    }

    /// Snaps a raw accuracy to the nearest 5% step, halves rounding away
    /// from zero.
    pub fn snap(raw: f64) -> Result<Self, AccuracyError> {
        if !(0.0..=1.0).contains(&raw) {
            return Err(AccuracyError::OutOfRange(raw));
        }
        // A tiny guard keeps binary artefacts such as 0.875 * 20 = 17.4999...
        // from rounding down.
        let t = libm::round(raw * 20.0 + 1e-9);
        Ok(Accuracy(t.clamp(0.0, 20.0) as u8))
    }

    /// Snaps `correct / total` using integer arithmetic only.
    pub fn from_counts(correct: usize, total: usize) -> Result<Self, AccuracyError> {
        if total == 0 {
            return Err(AccuracyError::NoObservations);
        }
        if correct > total {
            return Err(AccuracyError::OutOfRange(correct as f64 / total as f64));
        }
        // round(20c / t) with halves going up: floor((40c + t) / 2t).
        let t = (40 * correct as u128 + total as u128) / (2 * total as u128);
        Ok(Accuracy(t as u8))
    }

    pub fn twentieths(self) -> u8 {
        self.0
    }

    pub fn value(self) -> f64 {
        self.0 as f64 / 20.0
    }

    pub fn noise_rate(self) -> f64 {
        (20 - self.0) as f64 / 20.0
    }

    /// `round(n * p)` with halves going up.
    pub fn expected_correct(self, n: usize) -> usize {
        ((2 * n as u128 * self.0 as u128 + 20) / 40) as usize
    }
}

impl fmt::Display for Accuracy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:.2}", self.value())
    }
}
