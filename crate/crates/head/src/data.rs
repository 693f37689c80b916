//! Backbone transcriptions with gold labels transferred onto their tokens.

use std::path::Path;

use rayon::prelude::*;
use stress_backbone::{LayeredAsr, LayeredStates};
use stress_core::audio::read_wav;
use stress_core::{align_stress_labels, AlignOutcome, DatasetRecord};
use stress_nn::{Matrix, Scalar};

use crate::HeadError;

/// One utterance run through the frozen recognizer, with every layer's
/// states cached so several heads can train on the same transcriptions.
#[derive(Debug, Clone)]
pub struct PreparedSample<T> {
    pub id: String,
    pub states: LayeredStates<T>,
    pub gold_words: Vec<String>,
    pub gold_stress: Vec<u8>,
    /// Token labels when the hypothesis word count matches the gold one.
    pub token_labels: Option<Vec<u8>>,
    /// Word count of the hypothesis.
    pub hyp_words: usize,
}

impl<T: Scalar> PreparedSample<T> {
    pub fn is_rejected(&self) -> bool {
        self.token_labels.is_none()
    }

    pub fn encoder_layer(&self, layer: usize) -> Result<&Matrix<T>, HeadError> {
        self.states.encoder_states.get(layer).ok_or_else(|| {
            HeadError::Config(format!(
                "encoder layer {layer} not available ({} stored)",
                self.states.encoder_states.len()
            ))
        })
    }

    pub fn decoder_layer(&self, layer: usize) -> Result<&Matrix<T>, HeadError> {
        self.states.decoder_states.get(layer).ok_or_else(|| {
            HeadError::Config(format!(
                "decoder layer {layer} not available ({} stored)",
                self.states.decoder_states.len()
            ))
        })
    }
}

pub(crate) fn load_waveform(record: &DatasetRecord, manifest: &Path) -> Result<Vec<f32>, HeadError> {
    let (wav, sr) = read_wav(&record.audio_path(manifest))?;
    if sr != 16_000 {
        return Err(HeadError::Data(format!("{}: sample rate {sr}, expected 16000", record.id)));
    }
    Ok(wav)
}

/// Transcribes every record and aligns its gold stress labels.
///
/// Samples run in parallel; each transcription depends only on its own
/// audio, so the output is identical to a sequential run.
pub fn prepare_samples<T: Scalar, B: LayeredAsr<T>>(
    backbone: &B,
    records: &[DatasetRecord],
    manifest: &Path,
) -> Result<Vec<PreparedSample<T>>, HeadError> {
    records
        .par_iter()
        .map(|r| {
            let gold = r.sentence()?;
            let wav = load_waveform(r, manifest)?;
            let states = backbone.transcribe_with_states(&wav);
            let outcome = align_stress_labels(&gold, &states.tokenized())?;
            let hyp_words = match &outcome {
                AlignOutcome::Aligned(a) => stress_core::align::validate_word_index(&a.word_index)?,
                AlignOutcome::Rejected { hyp_words, .. } => *hyp_words,
            };
            Ok(PreparedSample {
                id: r.id.clone(),
                states,
                gold_words: r.words.clone(),
                gold_stress: r.stress.clone(),
                token_labels: outcome.aligned().map(|a| a.token_labels),
                hyp_words,
            })
        })
        .collect()
}
