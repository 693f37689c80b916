//! Per-layer hidden states of one transcription and the recognizer trait.

use stress_core::Tokenized;
use stress_nn::{Matrix, Scalar};

use crate::BackboneError;

/// Everything a downstream head may read from one greedy transcription.
/// Deliberately carries no timing information.
#[derive(Debug, Clone, PartialEq)]
pub struct LayeredStates<T> {
    /// `n_encoder_layers + 1` matrices of `frames × d`; entry 0 is the
    /// embedding output, entry k the output of block k.
    pub encoder_states: Vec<Matrix<T>>,
    /// `n_decoder_layers + 1` matrices of `tokens × d`, same indexing.
    pub decoder_states: Vec<Matrix<T>>,
    /// Generated token ids without `<bos>`/`<eos>`.
    pub tokens: Vec<u32>,
    pub token_strings: Vec<String>,
    /// Word position per token, `-1` for punctuation.
    pub word_index: Vec<i32>,
    pub text: String,
    /// Decoding hit the length limit before `<eos>`.
    pub truncated: bool,
    /// Encoder frames per second.
    pub frame_rate_hz: f64,
}

impl<T: Scalar> LayeredStates<T> {
    pub fn n_tokens(&self) -> usize {
        self.tokens.len()
    }

    pub fn n_frames(&self) -> usize {
        self.encoder_states.first().map_or(0, Matrix::rows)
    }

    pub fn tokenized(&self) -> Tokenized {
        Tokenized {
            tokens: self.token_strings.clone(),
            word_index: self.word_index.clone(),
        }
    }

    /// Checks the shape invariants: shared frame count and width across
    /// encoder layers, shared token count across decoder layers, and one
    /// decoder row per token.
    pub fn check_shapes(&self) -> Result<(), String> {
        let d = self
            .encoder_states
            .first()
            .map(Matrix::cols)
            .ok_or("no encoder states")?;
        let frames = self.n_frames();
        if self.encoder_states.iter().any(|m| m.shape() != (frames, d)) {
            return Err("encoder layers disagree in shape".into());
        }
        let t = self.tokens.len();
        if self.decoder_states.iter().any(|m| m.shape() != (t, d)) {
            return Err("decoder layers disagree with the token count".into());
        }
        if self.token_strings.len() != t || self.word_index.len() != t {
            return Err("token metadata length mismatch".into());
        }
        Ok(())
    }
}

/// A recognizer exposing layered states. The toy model implements it;
/// adapters for pretrained weights plug in here.
pub trait LayeredAsr<T: Scalar>: Sync {
    fn d_model(&self) -> usize;
    fn n_encoder_layers(&self) -> usize;
    fn n_decoder_layers(&self) -> usize;
    /// Digest over all parameters; must never change once frozen.
    fn digest(&self) -> String;
    fn transcribe_with_states(&self, waveform: &[f32]) -> LayeredStates<T>;
}

impl<T: Scalar> LayeredAsr<T> for crate::ToyBackbone<T> {
    fn d_model(&self) -> usize {
        self.config().d_model
    }

    fn n_encoder_layers(&self) -> usize {
        self.config().n_encoder_layers
    }

    fn n_decoder_layers(&self) -> usize {
        self.config().n_decoder_layers
    }

    fn digest(&self) -> String {
        crate::ToyBackbone::digest(self)
    }

    fn transcribe_with_states(&self, waveform: &[f32]) -> LayeredStates<T> {
        crate::ToyBackbone::transcribe_with_states(self, waveform)
    }
}

/// Layer the stress head reads: `round(0.75·L)` unless overridden, and
/// always within `[1, L]`.
pub fn select_head_input_layer(n_layers: usize, override_layer: Option<usize>) -> Result<usize, BackboneError> {
    let layer = override_layer.unwrap_or_else(|| (0.75 * n_layers as f64).round() as usize);
    if layer < 1 || layer > n_layers {
        return Err(BackboneError::Config(format!(
            "layer {layer} outside [1, {n_layers}]"
        )));
    }
    Ok(layer)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_layer_is_three_quarters_depth() {
        assert_eq!(select_head_input_layer(12, None).unwrap(), 9);
        assert_eq!(select_head_input_layer(4, None).unwrap(), 3);
        assert_eq!(select_head_input_layer(12, Some(12)).unwrap(), 12);
        assert_eq!(select_head_input_layer(1, None).unwrap(), 1);
        assert!(select_head_input_layer(12, Some(0)).is_err());
        assert!(select_head_input_layer(4, Some(5)).is_err());
    }
}
