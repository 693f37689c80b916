//! Word-level evaluation of stress detectors, the recurrent prosodic
//! baseline, and the reports comparing them.

pub mod baseline;
pub mod evaluate;
pub mod features;

use std::path::{Path, PathBuf};

use stress_backbone::BackboneError;
use stress_core::CoreError;
use stress_datagen::DatagenError;
use stress_head::HeadError;
use stress_nn::CheckpointError;
use stress_probe::ProbeError;

pub use baseline::{train_baseline, BaselineTrainOptions, BaselineTrainReport, BlstmTagger, Standardizer};
pub use evaluate::{evaluate_baseline, evaluate_stress_head, Comparison, EvalReport, SampleOutcome};
pub use features::{extract_baseline_features, AlignSource, AlignmentTable, BaselineWordFeatures};
pub use stress_core::{f1_score, precision_recall_f1, Metrics};

pub type BlstmTaggerF32 = BlstmTagger<f32>;
pub type BlstmTaggerF64 = BlstmTagger<f64>;

#[derive(Debug, thiserror::Error)]
pub enum EvalError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("word boundaries: {0}")]
    Boundary(String),
    #[error("{0} has no samples")]
    EmptyTestSet(String),
    #[error(transparent)]
    Head(#[from] HeadError),
    #[error(transparent)]
    Backbone(#[from] BackboneError),
    #[error(transparent)]
    Core(#[from] CoreError),
    #[error(transparent)]
    Probe(#[from] ProbeError),
    #[error(transparent)]
    Datagen(#[from] DatagenError),
    #[error(transparent)]
    Checkpoint(#[from] CheckpointError),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

impl EvalError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        Self::Io {
            path: path.to_path_buf(),
            source,
        }
    }
}
