use alloc::collections::BTreeMap;
use alloc::string::String;

use super::Instance;
use crate::accuracy::Accuracy;

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum NoiseError {
    #[error("no instances of type {0:?} to estimate from")]
    NoInstances(String),
    #[error("an instance of type {0:?} carries no gold flag")]
    MissingGold(String),
}

/// Accuracy and training-pool size for one entity type.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct NoiseEntry {
    pub accuracy: Accuracy,
    pub population: usize,
}

/// Per-type noise entries, keyed by entity type.
pub type NoiseProfile = BTreeMap<String, NoiseEntry>;

/// Estimates a type's accuracy from gold-flagged development instances.
///
/// The raw accuracy is snapped to the 5% grid; `population` is the size of
/// the training pool the estimate will be applied to.
pub fn estimate_noise_rate(
    dev: &[Instance],
    entity_type: &str,
    population: usize,
) -> Result<NoiseEntry, NoiseError> {
    let mut total = 0usize;
    let mut correct = 0usize;
    for inst in dev.iter().filter(|i| i.entity_type == entity_type) {
        total += 1;
        match inst.gold {
            Some(true) => correct += 1,
            Some(false) => {}
            None => return Err(NoiseError::MissingGold(entity_type.into())),
        }
    }
    let accuracy =
        Accuracy::from_counts(correct, total).map_err(|_| NoiseError::NoInstances(entity_type.into()))?;
    Ok(NoiseEntry {
        accuracy,
        population,
    })
}
