//! Stress-detection head on top of a frozen layered recognizer.
//!
//! The head reads encoder and decoder hidden states from one configured
//! layer each, runs them through a decoder block with cross-attention and
//! classifies every generated token as stressed or not. Word decisions are
//! the any-token aggregation of thresholded token scores.

pub mod config;
pub mod data;
pub mod model;
pub mod predict;
pub mod sweep;
pub mod train;

use stress_backbone::BackboneError;
use stress_core::CoreError;
use stress_nn::CheckpointError;

pub use config::{count_head_parameters, HeadConfig};
pub use data::{prepare_samples, PreparedSample};
pub use model::StressHead;
pub use predict::{check_compatible, evaluate_prepared, predict, PreparedEvaluation, StressedTranscript, STRESS_THRESHOLD};
pub use sweep::{layer_sweep, SweepRow, SweepTable};
pub use train::{train_head, train_on_prepared, HeadEpochStats, HeadTrainReport, TrainOptions};

pub type StressHeadF32 = StressHead<f32>;
pub type StressHeadF64 = StressHead<f64>;

#[derive(Debug, thiserror::Error)]
pub enum HeadError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("contract violation: {0}")]
    Contract(String),
    #[error("data error: {0}")]
    Data(String),
    #[error(transparent)]
    Backbone(#[from] BackboneError),
    #[error(transparent)]
    Core(#[from] CoreError),
    #[error(transparent)]
    Checkpoint(#[from] CheckpointError),
    #[error(
        "{rejected} of {total} transcriptions disagree with the gold word count; \
         the recognizer is too weak for this data (e.g. {examples:?})"
    )]
    TooManyRejected {
        rejected: usize,
        total: usize,
        examples: Vec<String>,
    },
}
