use alloc::vec::Vec;
use core::cmp::Ordering;

/// A batch ordered by descending confidence.
#[derive(Clone, Debug, PartialEq)]
pub struct RankedBatch {
    /// Batch positions in rank order.
    pub order: Vec<usize>,
    /// Confidences in rank order (non-increasing).
    pub confidences: Vec<f64>,
    /// Tie-break keys (dataset indices) in rank order.
    pub keys: Vec<usize>,
}

/// Descending confidence, ties by ascending key.
pub fn rank_order(confidences: &[f64], keys: &[usize]) -> Vec<usize> {
    assert_eq!(confidences.len(), keys.len());
    let mut order: Vec<usize> = (0..confidences.len()).collect();
    order.sort_by(|&a, &b| {
        confidences[b]
            .partial_cmp(&confidences[a])
            .unwrap_or(Ordering::Equal)
            .then(keys[a].cmp(&keys[b]))
    });
    order
}

impl RankedBatch {
    /// Ranks detached confidences. `keys` carry the dataset index of each
    /// batch member.
    pub fn new(confidences: &[f64], keys: &[usize]) -> Self {
        let order = rank_order(confidences, keys);
        RankedBatch {
            confidences: order.iter().map(|&i| confidences[i]).collect(),
            keys: order.iter().map(|&i| keys[i]).collect(),
            order,
        }
    }

    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }

    /// Reorders per-member values into rank order.
    pub fn gather(&self, values: &[f64]) -> Vec<f64> {
        self.order.iter().map(|&i| values[i]).collect()
    }
}
