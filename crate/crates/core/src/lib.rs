//! Hypergeometric learning (HGL) for denoising distantly supervised
//! named-entity data.
//!
//! The crate is `no_std` and only needs `alloc`. Everything in here is a pure
//! function of its inputs plus an explicit seed: dictionary matching, the
//! hypergeometric batch weights, the attention-pooled confidence model with
//! hand-written gradients, the training losses, mention blocking and the
//! ranking metrics. File formats and the command line live in the `hgl`
//! companion crate.

#![no_std]
#![warn(clippy::std_instead_of_alloc)]
#![warn(clippy::std_instead_of_core)]

extern crate alloc;

pub mod accuracy;
pub mod blocking;
pub mod corpus;
pub mod denoiser;
pub mod evaluation;
pub mod hypergeom;
pub mod training;

mod math;

/// Version of this crate, recorded in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub use accuracy::Accuracy;
pub use corpus::{Corpus, Dictionary, Instance, Mention, Sentence, Source, Span};
pub use denoiser::{DenoiserConfig, DenoiserModel};
pub use hypergeom::{BatchWeights, HypergeomParams};
pub use training::{LossKind, TrainConfig};
