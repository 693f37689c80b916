//! Micro-averaged word-level precision, recall and F1.

use serde::{Deserialize, Serialize};

use crate::error::CoreError;
use crate::types::WordPrediction;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Metrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    /// Gold-stressed words.
    pub support_positive: usize,
    pub n_samples: usize,
    pub true_positives: usize,
    pub false_positives: usize,
    pub false_negatives: usize,
    pub n_words: usize,
}

/// Harmonic mean, zero when both inputs are zero.
pub fn f1_score(precision: f64, recall: f64) -> f64 {
    if precision + recall > 0.0 {
        2.0 * precision * recall / (precision + recall)
    } else {
        0.0
    }
}

impl Metrics {
    /// Metrics from raw counts; any zero denominator yields 0.
    pub fn from_counts(tp: usize, fp: usize, fn_: usize, n_words: usize, n_samples: usize) -> Self {
        let ratio = |num: usize, den: usize| if den == 0 { 0.0 } else { num as f64 / den as f64 };
        let precision = ratio(tp, tp + fp);
        let recall = ratio(tp, tp + fn_);
        Self {
            precision,
            recall,
            f1: f1_score(precision, recall),
            support_positive: tp + fn_,
            n_samples,
            true_positives: tp,
            false_positives: fp,
            false_negatives: fn_,
            n_words,
        }
    }
}

/// Micro-averages over every word of every prediction.
pub fn precision_recall_f1(predictions: &[WordPrediction]) -> Result<Metrics, CoreError> {
    let (mut tp, mut fp, mut fn_, mut n) = (0, 0, 0, 0);
    for (i, p) in predictions.iter().enumerate() {
        let gold = p.gold.as_ref().ok_or_else(|| {
            CoreError::InvalidSentence(format!("prediction {i} carries no gold labels"))
        })?;
        if gold.len() != p.predicted.len() {
            return Err(CoreError::LengthMismatch {
                what: "gold vs predicted",
                left: gold.len(),
                right: p.predicted.len(),
            });
        }
        for (&g, &h) in gold.iter().zip(&p.predicted) {
            n += 1;
            match (g != 0, h != 0) {
                (true, true) => tp += 1,
                (false, true) => fp += 1,
                (true, false) => fn_ += 1,
                (false, false) => {}
            }
        }
    }
    Ok(Metrics::from_counts(tp, fp, fn_, n, predictions.len()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn wp(pred: &[u8], gold: &[u8]) -> WordPrediction {
        let words = (0..pred.len()).map(|i| format!("w{i}")).collect();
        WordPrediction::new(words, pred.to_vec(), Some(gold.to_vec())).unwrap()
    }

    #[test]
    fn perfect_and_degenerate_cases() {
        let m = precision_recall_f1(&[wp(&[0, 1, 0], &[0, 1, 0])]).unwrap();
        assert_eq!((m.precision, m.recall, m.f1), (1.0, 1.0, 1.0));
        let m = precision_recall_f1(&[wp(&[0, 0, 0], &[0, 1, 1])]).unwrap();
        assert_eq!((m.precision, m.recall, m.f1), (0.0, 0.0, 0.0));
        assert_eq!(m.support_positive, 2);
        let m = precision_recall_f1(&[]).unwrap();
        assert_eq!(m.f1, 0.0);
    }

    #[test]
    fn micro_average_pools_words() {
        let m = precision_recall_f1(&[wp(&[1, 1], &[1, 0]), wp(&[0, 1, 1], &[1, 1, 1])]).unwrap();
        assert_eq!((m.true_positives, m.false_positives, m.false_negatives), (3, 1, 1));
        assert!((m.precision - 0.75).abs() < 1e-12);
        assert!((m.recall - 0.75).abs() < 1e-12);
        assert_eq!(m.n_words, 5);
        assert_eq!(m.n_samples, 2);
    }

    #[test]
    fn missing_gold_is_a_contract_violation() {
        let p = WordPrediction::new(vec!["a".into()], vec![1], None).unwrap();
        assert!(precision_recall_f1(&[p]).is_err());
    }

    proptest! {
        #[test]
        fn invariant_under_sample_and_word_permutation(
            rows in prop::collection::vec(prop::collection::vec((0u8..2, 0u8..2), 1..8), 1..10),
            seed in any::<u64>(),
        ) {
            use rand::seq::SliceRandom;
            use rand::SeedableRng;
            let preds: Vec<_> = rows.iter().map(|r| {
                let (p, g): (Vec<u8>, Vec<u8>) = r.iter().copied().unzip();
                wp(&p, &g)
            }).collect();
            let base = precision_recall_f1(&preds).unwrap();
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let mut shuffled: Vec<_> = rows.clone();
            shuffled.shuffle(&mut rng);
            for r in &mut shuffled {
                r.shuffle(&mut rng);
            }
            let preds2: Vec<_> = shuffled.iter().map(|r| {
                let (p, g): (Vec<u8>, Vec<u8>) = r.iter().copied().unzip();
                wp(&p, &g)
            }).collect();
            prop_assert_eq!(precision_recall_f1(&preds2).unwrap(), base);
            prop_assert!((0.0..=1.0).contains(&base.f1));
            prop_assert!((base.f1 - f1_score(base.precision, base.recall)).abs() < 1e-12);
        }
    }
}
