//! Layered encoder–decoder speech recognizer.
//!
//! The toy model turns 16 kHz audio into log-mel features, encodes them
//! with a transformer encoder and greedily decodes subword tokens. Every
//! intermediate layer is exposed through [`LayeredStates`] so downstream
//! heads and probes can read them without touching the parameters.

pub mod frontend;
pub mod model;
pub mod pretrain;
pub mod states;
pub mod vocab;
pub mod wer;

use stress_core::CoreError;
use stress_nn::CheckpointError;

pub use frontend::{FrontendConfig, LogMel};
pub use model::{BackboneConfig, ToyBackbone};
pub use pretrain::{pretrain_toy_backbone, PretrainConfig, PretrainReport};
pub use states::{select_head_input_layer, LayeredAsr, LayeredStates};
pub use vocab::Vocabulary;

/// Single-precision model used for training and the CLI.
pub type ToyBackboneF32 = ToyBackbone<f32>;
/// Double-precision model, mainly for numerical checks.
pub type ToyBackboneF64 = ToyBackbone<f64>;
pub type LayeredStatesF32 = LayeredStates<f32>;

#[derive(Debug, thiserror::Error)]
pub enum BackboneError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("data error: {0}")]
    Data(String),
    #[error(transparent)]
    Core(#[from] CoreError),
    #[error(transparent)]
    Checkpoint(#[from] CheckpointError),
    #[error("held-out word accuracy {achieved:.3} below required {required:.3}: {diagnostics}")]
    Accuracy {
        achieved: f64,
        required: f64,
        diagnostics: String,
    },
}
