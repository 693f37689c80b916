//! Synthetic stressed-speech corpus generation.
//!
//! Sentences are labelled with two contrastive stress patterns, turned into
//! prosody plans, rendered to audio and written as JSONL manifests.

pub mod corpus;
pub mod dataset;
pub mod plan;
pub mod provider;
pub mod remote_tts;
pub mod ssml;
pub mod synth;
pub mod voice;

use std::path::{Path, PathBuf};

use stress_core::CoreError;

pub use dataset::{generate_dataset, generate_with, GeneratedDataset, GenerationConfig, GenerationReport};
pub use plan::{build_synthesis_plan, SynthesisPlan};
pub use provider::{RuleBasedProvider, StressLabelProvider};
pub use synth::{SpeechSample, SpeechSynthesizer, ToySynthesizer};

#[derive(Debug, thiserror::Error)]
pub enum DatagenError {
    #[error("contract violation: {0}")]
    Contract(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("ssml: {0}")]
    Ssml(String),
    #[error("remote service: {0}")]
    Remote(String),
    #[error(transparent)]
    Core(#[from] CoreError),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl DatagenError {
    pub(crate) fn io(path: &Path, source: std::io::Error) -> Self {
        Self::Io {
            path: path.to_path_buf(),
            source,
        }
    }
}
