//! Per-word duration targets paired with mean decoder states.

use stress_backbone::LayeredStates;
use stress_core::align::validate_word_index;
use stress_core::DatasetRecord;
use stress_nn::Scalar;

use crate::ProbeError;

/// Gap from each word start to the next, the last word running to the
/// end of the sample.
pub fn word_durations(starts: &[f64], sample_end_s: f64) -> Vec<f64> {
    starts
        .iter()
        .enumerate()
        .map(|(i, &s)| starts.get(i + 1).copied().unwrap_or(sample_end_s) - s)
        .collect()
}

/// Mean decoder state over each word's tokens at `layer`, with the word
/// durations from the manifest's start times. Fails when the transcript
/// does not have the gold word count.
pub fn word_duration_targets<T: Scalar>(
    record: &DatasetRecord,
    states: &LayeredStates<T>,
    layer: usize,
    sample_end_s: f64,
) -> Result<(Vec<Vec<f64>>, Vec<f64>), ProbeError> {
    let dec = states
        .decoder_states
        .get(layer)
        .ok_or_else(|| ProbeError::Config(format!("decoder layer {layer} not available")))?;
    let n_words = validate_word_index(&states.word_index)?;
    if n_words != record.words.len() {
        return Err(ProbeError::Mapping {
            id: record.id.clone(),
            gold: record.words.len(),
            hyp: n_words,
        });
    }
    let mut sums = vec![vec![0.0; dec.cols()]; n_words];
    let mut counts = vec![0usize; n_words];
    for (t, &w) in states.word_index.iter().enumerate() {
        if w < 0 {
            continue;
        }
        counts[w as usize] += 1;
        for (s, v) in sums[w as usize].iter_mut().zip(dec.row(t)) {
            *s += v.f64();
        }
    }
    let embeddings = sums
        .into_iter()
        .zip(&counts)
        .map(|(s, &n)| s.into_iter().map(|x| x / n as f64).collect())
        .collect();
    Ok((embeddings, word_durations(&record.word_start_s, sample_end_s)))
}
