//! Layer-wise prosody probes.
//!
//! Framewise pitch and energy are pooled over 300 ms windows and paired
//! with mean encoder states; word durations are paired with mean decoder
//! states over each word's tokens. A random forest per layer and target
//! measures how well the states predict the prosodic value, reported as
//! MAE relative to the target range with a bootstrap interval.

pub mod duration;
pub mod forest;
pub mod frames;
pub mod pool;
pub mod probe;
pub mod report;

use std::path::{Path, PathBuf};

use stress_backbone::BackboneError;
use stress_core::CoreError;

pub use duration::{word_duration_targets, word_durations};
pub use forest::{ForestConfig, RandomForest};
pub use frames::{compute_f0, compute_rms, FrameSeries, SeriesKind};
pub use pool::{align_windows, pool_embeddings, pool_targets, PooledTargets};
pub use probe::{probe_layer, probe_layer_with, ForestRegressor, LayerProbeResult, ProbeTarget, Regressor};
pub use report::{probe_report, ProbeReport};

#[derive(Debug, thiserror::Error)]
pub enum ProbeError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("{id}: transcript has {hyp} words, gold has {gold}")]
    Mapping { id: String, gold: usize, hyp: usize },
    #[error("probe needs at least {min} samples, got {n}")]
    TooFewSamples { n: usize, min: usize },
    #[error("target {0} is constant over the probe set")]
    DegenerateTarget(String),
    #[error(transparent)]
    Core(#[from] CoreError),
    #[error(transparent)]
    Backbone(#[from] BackboneError),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl ProbeError {
    pub(crate) fn io(path: &Path, source: std::io::Error) -> Self {
        Self::Io {
            path: path.to_path_buf(),
            source,
        }
    }
}
