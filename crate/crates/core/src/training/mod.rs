//! Mini-batch training of per-type denoisers.
//!
//! Each epoch shuffles the type's instance pool with a seeded stream and
//! walks it in batches of `B` (the last batch may be shorter and gets its
//! own weights). Every batch is ranked by detached confidence, scored with
//! the configured loss, backpropagated and followed by one Adam step.

mod adam;
mod loss;
mod rank;

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::accuracy::Accuracy;
use crate::corpus::{Corpus, Instance, NoiseProfile};
use crate::denoiser::{DenoiserConfig, DenoiserError, DenoiserModel, GradientSet, MarkedInstance, Vocab};
use crate::hypergeom::{BatchWeights, HypergeomError, HypergeomParams};

pub use adam::{AdamConfig, AdamState, NonFiniteGradient};
pub use loss::{hgl_loss, instance_em_loss, naive_loss, soft_bce, xr_loss, LossOutput, CLAMP};
pub use rank::{rank_order, RankedBatch};

/// Conservative learning rate suited to fine-tuning pretrained encoders.
pub const FINE_TUNING_LEARNING_RATE: f64 = 1e-5;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum LossKind {
    Hgl,
    InstanceEm,
    Xr,
    Naive,
}

impl LossKind {
    pub const ALL: [LossKind; 4] = [LossKind::Hgl, LossKind::InstanceEm, LossKind::Xr, LossKind::Naive];

    pub fn name(self) -> &'static str {
        match self {
            LossKind::Hgl => "hgl",
            LossKind::InstanceEm => "em",
            LossKind::Xr => "xr",
            LossKind::Naive => "naive",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.name() == name)
    }
}

/// Where detached confidences come from.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ConfidenceSource {
    /// The forward pass of the current batch under the current parameters.
    PerBatch,
    /// A snapshot of the whole pool taken before each epoch.
    EpochFrozen,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainConfig {
    pub batch_size: usize,
    pub learning_rate: f64,
    pub epochs: usize,
    pub seed: u64,
    pub loss: LossKind,
    /// Confidences used to rank a batch.
    pub ranking: ConfidenceSource,
    /// Targets for the instance-level EM loss.
    pub em_targets: ConfidenceSource,
    pub denoiser: DenoiserConfig,
    pub adam: AdamConfig,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            batch_size: 150,
            learning_rate: 1e-3,
            epochs: 10,
            seed: 0,
            loss: LossKind::Hgl,
            ranking: ConfidenceSource::PerBatch,
            em_targets: ConfidenceSource::EpochFrozen,
            denoiser: DenoiserConfig::default(),
            adam: AdamConfig::default(),
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), TrainingError> {
        if self.batch_size == 0 {
            return Err(TrainingError::BadConfig("batch_size must be positive"));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(TrainingError::BadConfig("learning_rate must be positive and finite"));
        }
        if self.denoiser.dim == 0 {
            return Err(TrainingError::BadConfig("embedding dimension must be positive"));
        }
        Ok(())
    }

    fn needs_snapshot(&self) -> bool {
        self.ranking == ConfidenceSource::EpochFrozen
            || (self.loss == LossKind::InstanceEm && self.em_targets == ConfidenceSource::EpochFrozen)
    }
}

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum TrainingError {
    #[error("invalid training configuration: {0}")]
    BadConfig(&'static str),
    #[error("no training instances for type {0:?}")]
    EmptyPool(String),
    #[error("instance of type {found:?} in the pool for {expected:?}")]
    MixedTypes { expected: String, found: String },
    #[error("no noise entry for type {0:?}")]
    MissingNoise(String),
    #[error("non-finite gradient at epoch {epoch}, batch {batch} (tensor {tensor})")]
    NonFiniteGradient { epoch: usize, batch: usize, tensor: usize },
    #[error(transparent)]
    Hypergeom(#[from] HypergeomError),
    #[error(transparent)]
    Denoiser(#[from] DenoiserError),
}

/// Statistics for one completed epoch.
#[derive(Clone, Debug, PartialEq)]
pub struct EpochRecord {
    pub entity_type: String,
    /// 1-based.
    pub epoch: usize,
    pub batches: usize,
    /// Mean over batches of the optimised loss.
    pub mean_loss: f64,
    /// Mean over batches of the summed targets (`sum omega` for the
    /// hypergeometric loss).
    pub mean_target_mass: f64,
    /// Mean over batches of the auxiliary pool loss, when one is attached.
    pub mean_aux_loss: Option<f64>,
    /// Confidences that hit the log clamp during the epoch.
    pub clamped: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainOutcome {
    pub model: DenoiserModel,
    pub log: Vec<EpochRecord>,
}

const STREAM_INIT: u64 = 1;
const STREAM_SHUFFLE: u64 = 2;
pub(crate) const STREAM_AUX: u64 = 3;

/// Per-type, per-purpose seed so types train independently of each other.
pub(crate) fn derive_seed(seed: u64, entity_type: &str, stream: u64) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in entity_type.bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    let mut z = seed ^ h ^ stream.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

struct BatchStats {
    loss: f64,
    target_mass: f64,
    clamped: usize,
}

/// A shuffled instance pool with its own random stream.
struct Pool {
    marked: Vec<MarkedInstance>,
    accuracy: Accuracy,
    rng: ChaCha8Rng,
    order: Vec<usize>,
    cursor: usize,
    weights: BTreeMap<usize, BatchWeights>,
    snapshot: Vec<f64>,
}

impl Pool {
    fn new(model: &DenoiserModel, corpus: &Corpus, instances: &[Instance], accuracy: Accuracy, seed: u64) -> Self {
        Pool {
            marked: instances.iter().map(|i| model.mark_instance(corpus, i)).collect(),
            accuracy,
            rng: ChaCha8Rng::seed_from_u64(seed),
            order: (0..instances.len()).collect(),
            cursor: 0,
            weights: BTreeMap::new(),
            snapshot: Vec::new(),
        }
    }

    fn len(&self) -> usize {
        self.marked.len()
    }

    fn start_epoch(&mut self, model: &DenoiserModel, snapshot: bool) -> Result<(), TrainingError> {
        self.order.shuffle(&mut self.rng);
        self.cursor = 0;
        if snapshot {
            self.snapshot = self
                .marked
                .iter()
                .map(|m| model.confidence(m))
                .collect::<Result<_, _>>()?;
        }
        Ok(())
    }

    fn next_batch(&mut self, size: usize) -> Option<Vec<usize>> {
        if self.cursor >= self.order.len() {
            return None;
        }
        let end = (self.cursor + size).min(self.order.len());
        let batch = self.order[self.cursor..end].to_vec();
        self.cursor = end;
        Some(batch)
    }

    fn weights(&mut self, batch: usize) -> Result<&BatchWeights, TrainingError> {
        if !self.weights.contains_key(&batch) {
            let w = HypergeomParams::from_accuracy(self.len(), self.accuracy, batch)?.tail_weights();
            self.weights.insert(batch, w);
        }
        Ok(&self.weights[&batch])
    }

    /// Adds `scale * d loss / d theta` for one batch into `grads`.
    fn accumulate(
        &mut self,
        model: &DenoiserModel,
        batch: &[usize],
        config: &TrainConfig,
        scale: f64,
        grads: &mut GradientSet,
    ) -> Result<BatchStats, TrainingError> {
        let caches = batch
            .iter()
            .map(|&i| model.forward(&self.marked[i]))
            .collect::<Result<Vec<_>, _>>()?;
        let live: Vec<f64> = caches.iter().map(|c| c.confidence()).collect();
        let frozen = || batch.iter().map(|&i| self.snapshot[i]).collect::<Vec<f64>>();
        let ranked = match config.ranking {
            ConfidenceSource::PerBatch => RankedBatch::new(&live, batch),
            ConfidenceSource::EpochFrozen => RankedBatch::new(&frozen(), batch),
        };
        let f = ranked.gather(&live);
        let (out, target_mass) = match config.loss {
            LossKind::Hgl => {
                let w = self.weights(batch.len())?;
                (hgl_loss(&f, w), w.total_weight())
            }
            LossKind::Naive => (naive_loss(&f), f.len() as f64),
            LossKind::InstanceEm => {
                let targets = match config.em_targets {
                    ConfidenceSource::PerBatch => f.clone(),
                    ConfidenceSource::EpochFrozen => ranked.gather(&frozen()),
                };
                let mass = targets.iter().sum();
                (instance_em_loss(&f, &targets), mass)
            }
            LossKind::Xr => {
                let p = self.accuracy.value();
                (xr_loss(&f, p), p * f.len() as f64)
            }
        };
        for (r, &pos) in ranked.order.iter().enumerate() {
            model.accumulate_backward(&caches[pos], scale * out.grads[r], grads)?;
        }
        Ok(BatchStats {
            loss: out.loss,
            target_mass,
            clamped: out.clamped,
        })
    }
}

/// A second pool trained jointly with the main one, weighted by `lambda`.
pub(crate) struct AuxPool<'a> {
    pub instances: &'a [Instance],
    pub accuracy: Accuracy,
    pub lambda: f64,
}

fn check_pool(instances: &[Instance], entity_type: &str) -> Result<(), TrainingError> {
    if let Some(bad) = instances.iter().find(|i| i.entity_type != entity_type) {
        return Err(TrainingError::MixedTypes {
            expected: entity_type.into(),
            found: bad.entity_type.clone(),
        });
    }
    Ok(())
}

pub(crate) fn run(
    corpus: &Corpus,
    instances: &[Instance],
    accuracy: Accuracy,
    config: &TrainConfig,
    aux: Option<AuxPool<'_>>,
    observer: &mut dyn FnMut(&EpochRecord),
) -> Result<TrainOutcome, TrainingError> {
    config.validate()?;
    let entity_type = match instances.first() {
        Some(i) => i.entity_type.clone(),
        None => return Err(TrainingError::EmptyPool(String::new())),
    };
    check_pool(instances, &entity_type)?;
    let aux = aux.filter(|a| a.lambda != 0.0 && !a.instances.is_empty());
    if let Some(a) = &aux {
        check_pool(a.instances, &entity_type)?;
    }
    let seed = config.seed;
    let mut model = DenoiserModel::new(
        &entity_type,
        Vocab::from_corpus(corpus),
        &config.denoiser,
        derive_seed(seed, &entity_type, STREAM_INIT),
    )?;
    let mut pool = Pool::new(&model, corpus, instances, accuracy, derive_seed(seed, &entity_type, STREAM_SHUFFLE));
    let mut aux_pool = aux.as_ref().map(|a| {
        let mut p = Pool::new(&model, corpus, a.instances, a.accuracy, derive_seed(seed, &entity_type, STREAM_AUX));
        p.cursor = p.len();
        (p, a.lambda)
    });
    let mut adam = AdamState::new(model.tensors().iter().map(|t| t.len()), config.adam);
    let snapshot = config.needs_snapshot();
    let b = config.batch_size;
    let mut log = Vec::with_capacity(config.epochs);

    for epoch in 1..=config.epochs {
        pool.start_epoch(&model, snapshot)?;
        let mut rec = EpochRecord {
            entity_type: entity_type.clone(),
            epoch,
            batches: 0,
            mean_loss: 0.0,
            mean_target_mass: 0.0,
            mean_aux_loss: aux_pool.as_ref().map(|_| 0.0),
            clamped: 0,
        };
        while let Some(batch) = pool.next_batch(b) {
            let mut grads = GradientSet::zeros_like(&model);
            let main = pool.accumulate(&model, &batch, config, 1.0, &mut grads)?;
            let mut loss = main.loss;
            rec.clamped += main.clamped;
            rec.mean_target_mass += main.target_mass;
            if let Some((ap, lambda)) = aux_pool.as_mut() {
                let ab = match ap.next_batch(b) {
                    Some(x) => x,
                    None => {
                        ap.start_epoch(&model, snapshot)?;
                        ap.next_batch(b).expect("auxiliary pool is non-empty")
                    }
                };
                let side = ap.accumulate(&model, &ab, config, *lambda, &mut grads)?;
                loss += *lambda * side.loss;
                rec.clamped += side.clamped;
                *rec.mean_aux_loss.as_mut().expect("set with the pool") += side.loss;
            }
            adam.step(model.tensors_mut(), &grads.tensors, config.learning_rate)
                .map_err(|e| TrainingError::NonFiniteGradient {
                    epoch,
                    batch: rec.batches,
                    tensor: e.tensor,
                })?;
            rec.batches += 1;
            rec.mean_loss += loss;
        }
        let n = rec.batches as f64;
        rec.mean_loss /= n;
        rec.mean_target_mass /= n;
        if let Some(a) = rec.mean_aux_loss.as_mut() {
            *a /= n;
        }
        observer(&rec);
        log.push(rec);
    }
    Ok(TrainOutcome { model, log })
}

/// Trains one denoiser on a single-type pool.
pub fn train_type(
    corpus: &Corpus,
    instances: &[Instance],
    accuracy: Accuracy,
    config: &TrainConfig,
    observer: &mut dyn FnMut(&EpochRecord),
) -> Result<TrainOutcome, TrainingError> {
    run(corpus, instances, accuracy, config, None, observer)
}

/// Splits weakly labelled instances by type, in label order.
pub fn group_by_type(instances: &[Instance]) -> BTreeMap<String, Vec<Instance>> {
    let mut out: BTreeMap<String, Vec<Instance>> = BTreeMap::new();
    for inst in instances {
        out.entry(inst.entity_type.clone()).or_default().push(inst.clone());
    }
    out
}

/// Trains one denoiser per entity type present in `instances`.
pub fn train(
    corpus: &Corpus,
    instances: &[Instance],
    profile: &NoiseProfile,
    config: &TrainConfig,
    observer: &mut dyn FnMut(&EpochRecord),
) -> Result<BTreeMap<String, TrainOutcome>, TrainingError> {
    let mut out = BTreeMap::new();
    for (ty, pool) in group_by_type(instances) {
        let entry = profile.get(&ty).ok_or_else(|| TrainingError::MissingNoise(ty.clone()))?;
        let outcome = train_type(corpus, &pool, entry.accuracy, config, observer)?;
        out.insert(ty, outcome);
    }
    Ok(out)
}

/// Confidence of every instance under `model`, in input order.
pub fn score_instances(model: &DenoiserModel, corpus: &Corpus, instances: &[Instance]) -> Result<Vec<f64>, DenoiserError> {
    instances
        .iter()
        .map(|i| model.confidence(&model.mark_instance(corpus, i)))
        .collect()
}
