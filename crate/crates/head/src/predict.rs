//! Alignment-free inference: transcription plus per-token stress scores.

use serde::{Deserialize, Serialize};
use stress_backbone::{LayeredAsr, LayeredStates};
use stress_core::{aggregate_token_to_word, precision_recall_f1, Metrics, WordPrediction, NO_WORD};
use stress_nn::{Matrix, Scalar};

use crate::data::PreparedSample;
use crate::model::StressHead;
use crate::HeadError;

/// Token probability at or above which a token counts as stressed.
pub const STRESS_THRESHOLD: f64 = 0.5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StressedTranscript {
    pub text: String,
    pub words: Vec<String>,
    pub word_stress: Vec<u8>,
    pub tokens: Vec<String>,
    pub word_index: Vec<i32>,
    /// Stress probability of each token, in `[0, 1]`.
    pub token_scores: Vec<f64>,
}

impl StressedTranscript {
    /// The transcript with every stressed word wrapped in asterisks.
    pub fn marked_text(&self) -> String {
        let mut out = String::new();
        let mut open: Option<i32> = None;
        for (tok, &w) in self.tokens.iter().zip(&self.word_index) {
            if open.is_some() && open != Some(w) {
                out.push('*');
                open = None;
            }
            let starts = w != NO_WORD && open.is_none() && self.word_stress[w as usize] == 1;
            if starts {
                let body = tok.trim_start();
                out.push_str(&tok[..tok.len() - body.len()]);
                out.push('*');
                out.push_str(body);
                open = Some(w);
            } else {
                out.push_str(tok);
            }
        }
        if open.is_some() {
            out.push('*');
        }
        out
    }
}

/// Words spelled by the tokens, in word-index order.
fn hypothesis_words(tokens: &[String], word_index: &[i32]) -> Vec<String> {
    let mut words: Vec<String> = Vec::new();
    for (tok, &w) in tokens.iter().zip(word_index) {
        if w == NO_WORD {
            continue;
        }
        if w as usize == words.len() {
            words.push(String::new());
        }
        words[w as usize].push_str(tok.trim_start());
    }
    words
}

/// Checks that `head` was trained on `backbone` and reads layers it has.
pub fn check_compatible<T: Scalar, B: LayeredAsr<T> + ?Sized>(
    backbone: &B,
    head: &StressHead<T>,
) -> Result<(), HeadError> {
    let cfg = head.config();
    if cfg.d_model != backbone.d_model() {
        return Err(HeadError::Config(format!(
            "head expects width {} but the backbone has {}",
            cfg.d_model,
            backbone.d_model()
        )));
    }
    if cfg.input_layer_enc > backbone.n_encoder_layers() || cfg.input_layer_dec > backbone.n_decoder_layers() {
        return Err(HeadError::Config(format!(
            "head reads layers {}/{} but the backbone has {}/{}",
            cfg.input_layer_enc,
            cfg.input_layer_dec,
            backbone.n_encoder_layers(),
            backbone.n_decoder_layers()
        )));
    }
    if head.backbone_digest() != backbone.digest() {
        return Err(HeadError::Config(format!(
            "head was trained on backbone {} but got {}",
            head.backbone_digest(),
            backbone.digest()
        )));
    }
    Ok(())
}

fn layer<'a, T>(v: &'a [Matrix<T>], k: usize, side: &str) -> Result<&'a Matrix<T>, HeadError> {
    v.get(k)
        .ok_or_else(|| HeadError::Config(format!("{side} layer {k} missing from states")))
}

/// Scores one transcription. Only tokens and hidden states are read.
pub fn transcript_from_states<T: Scalar>(
    head: &StressHead<T>,
    states: &LayeredStates<T>,
) -> Result<StressedTranscript, HeadError> {
    let cfg = head.config();
    let enc = layer(&states.encoder_states, cfg.input_layer_enc, "encoder")?;
    let dec = layer(&states.decoder_states, cfg.input_layer_dec, "decoder")?;
    let token_scores = head.token_scores(enc, dec)?;
    let token_labels: Vec<u8> = token_scores.iter().map(|&p| u8::from(p >= STRESS_THRESHOLD)).collect();
    let word_stress = aggregate_token_to_word(&token_labels, &states.word_index)?;
    Ok(StressedTranscript {
        text: states.text.clone(),
        words: hypothesis_words(&states.token_strings, &states.word_index),
        word_stress,
        tokens: states.token_strings.clone(),
        word_index: states.word_index.clone(),
        token_scores,
    })
}

/// Transcribes `waveform` and marks stressed words. No timestamps,
/// alignment or reference text are involved.
pub fn predict<T: Scalar, B: LayeredAsr<T> + ?Sized>(
    backbone: &B,
    head: &StressHead<T>,
    waveform: &[f32],
) -> Result<StressedTranscript, HeadError> {
    check_compatible(backbone, head)?;
    transcript_from_states(head, &backbone.transcribe_with_states(waveform))
}

/// Word-level scores over samples whose transcription has the gold word
/// count; the others are excluded and listed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PreparedEvaluation {
    pub metrics: Metrics,
    pub evaluated: usize,
    pub excluded: usize,
    pub excluded_ids: Vec<String>,
}

pub fn evaluate_prepared<T: Scalar>(
    head: &StressHead<T>,
    samples: &[PreparedSample<T>],
) -> Result<PreparedEvaluation, HeadError> {
    let mut predictions = Vec::new();
    let mut excluded_ids = Vec::new();
    for s in samples {
        let t = transcript_from_states(head, &s.states)?;
        if t.word_stress.len() != s.gold_stress.len() {
            excluded_ids.push(s.id.clone());
            continue;
        }
        predictions.push(WordPrediction::new(
            t.words,
            t.word_stress,
            Some(s.gold_stress.clone()),
        )?);
    }
    Ok(PreparedEvaluation {
        metrics: precision_recall_f1(&predictions)?,
        evaluated: predictions.len(),
        excluded: excluded_ids.len(),
        excluded_ids,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn transcript(tokens: &[&str], stress: &[u8]) -> StressedTranscript {
        let tokens: Vec<String> = tokens.iter().map(|s| s.to_string()).collect();
        let word_index = stress_core::word_index_of_tokens(&tokens);
        StressedTranscript {
            text: tokens.concat(),
            words: hypothesis_words(&tokens, &word_index),
            word_stress: stress.to_vec(),
            token_scores: vec![0.0; tokens.len()],
            tokens,
            word_index,
        }
    }

    #[test]
    fn words_join_subword_pieces() {
        let t = transcript(&["The", " extraord", "inary", " cat", "."], &[0, 1, 0]);
        assert_eq!(t.words, ["The", "extraordinary", "cat"]);
    }

    #[test]
    fn marked_text_wraps_whole_words() {
        let t = transcript(&["Tom", " ran", " ho", "me", "."], &[0, 0, 1]);
        assert_eq!(t.marked_text(), "Tom ran *home*.");
        let t = transcript(&["Tom", " ran", " home"], &[1, 0, 1]);
        assert_eq!(t.marked_text(), "*Tom* ran *home*");
        let t = transcript(&[], &[]);
        assert_eq!(t.marked_text(), "");
    }
}
