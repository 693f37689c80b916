//! Word-level stress labels to token labels and back.

use serde::{Deserialize, Serialize};

use crate::error::CoreError;
use crate::text::{Tokenized, NO_WORD};
use crate::types::StressAnnotatedSentence;

/// Token sequence with its word map and per-token binary stress labels.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenAlignment {
    pub tokens: Vec<String>,
    pub word_index: Vec<i32>,
    pub token_labels: Vec<u8>,
}

/// Result of transferring gold labels onto a hypothesis transcription.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AlignOutcome {
    Aligned(TokenAlignment),
    /// Hypothesis word count differs from the gold word count.
    Rejected { gold_words: usize, hyp_words: usize },
}

impl AlignOutcome {
    pub fn aligned(self) -> Option<TokenAlignment> {
        match self {
            Self::Aligned(a) => Some(a),
            Self::Rejected { .. } => None,
        }
    }

    pub fn is_rejected(&self) -> bool {
        matches!(self, Self::Rejected { .. })
    }
}

/// Checks that non-negative word indices start at 0, never decrease and
/// advance by at most one. Returns the number of words.
pub fn validate_word_index(word_index: &[i32]) -> Result<usize, CoreError> {
    let mut words = 0usize;
    for (pos, &w) in word_index.iter().enumerate() {
        if w == NO_WORD {
            continue;
        }
        if w < 0 {
            return Err(CoreError::InvalidWordIndex(format!(
                "negative index {w} at token {pos}"
            )));
        }
        let w = w as usize;
        if w + 1 == words {
            continue;
        }
        if w != words {
            return Err(CoreError::InvalidWordIndex(format!(
                "index {w} at token {pos}, expected {} or {words}",
                words.saturating_sub(1)
            )));
        }
        words += 1;
    }
    Ok(words)
}

/// Transfers the gold word labels positionally onto the hypothesis tokens.
///
/// Word spellings are never compared: only the word counts must agree.
/// Tokens outside any word are labelled 0.
pub fn align_stress_labels(
    gold: &StressAnnotatedSentence,
    hyp: &Tokenized,
) -> Result<AlignOutcome, CoreError> {
    if hyp.tokens.len() != hyp.word_index.len() {
        return Err(CoreError::LengthMismatch {
            what: "tokens vs word_index",
            left: hyp.tokens.len(),
            right: hyp.word_index.len(),
        });
    }
    let hyp_words = validate_word_index(&hyp.word_index)?;
    let gold_words = gold.words().len();
    if hyp_words != gold_words {
        return Ok(AlignOutcome::Rejected {
            gold_words,
            hyp_words,
        });
    }
    let token_labels = hyp
        .word_index
        .iter()
        .map(|&w| {
            if w == NO_WORD {
                0
            } else {
                gold.stress()[w as usize]
            }
        })
        .collect();
    Ok(AlignOutcome::Aligned(TokenAlignment {
        tokens: hyp.tokens.clone(),
        word_index: hyp.word_index.clone(),
        token_labels,
    }))
}

/// A word is stressed iff at least one of its tokens is stressed.
pub fn aggregate_token_to_word(token_labels: &[u8], word_index: &[i32]) -> Result<Vec<u8>, CoreError> {
    if token_labels.len() != word_index.len() {
        return Err(CoreError::LengthMismatch {
            what: "token_labels vs word_index",
            left: token_labels.len(),
            right: word_index.len(),
        });
    }
    let n_words = validate_word_index(word_index)?;
    let mut out = vec![0u8; n_words];
    for (&label, &w) in token_labels.iter().zip(word_index) {
        if w != NO_WORD && label != 0 {
            out[w as usize] = 1;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::text::tokenize;

    fn gold(words: &[&str], stress: &[u8]) -> StressAnnotatedSentence {
        StressAnnotatedSentence::new_relaxed("g", words.join(" "), words, stress, 0).unwrap()
    }

    #[test]
    fn one_token_per_word() {
        let g = gold(&["the", "cat", "ran"], &[0, 1, 0]);
        let a = align_stress_labels(&g, &tokenize("the cat ran")).unwrap();
        assert_eq!(a.aligned().unwrap().token_labels, vec![0, 1, 0]);
    }

    #[test]
    fn count_mismatch_is_rejected() {
        let g = gold(&["the", "cat", "ran"], &[0, 1, 0]);
        let a = align_stress_labels(&g, &tokenize("the ran")).unwrap();
        assert_eq!(
            a,
            AlignOutcome::Rejected {
                gold_words: 3,
                hyp_words: 2
            }
        );
    }

    #[test]
    fn labels_broadcast_within_a_word() {
        let g = gold(&["unbelievable"], &[1]);
        let a = align_stress_labels(&g, &tokenize("unbelievable"))
            .unwrap()
            .aligned()
            .unwrap();
        assert_eq!(a.tokens, vec!["unbe", "liev", "able"]);
        assert_eq!(a.token_labels, vec![1, 1, 1]);
    }

    #[test]
    fn punctuation_is_unstressed() {
        let g = gold(&["the", "cat", "ran"], &[1, 1, 1]);
        let a = align_stress_labels(&g, &tokenize("the cat ran ."))
            .unwrap()
            .aligned()
            .unwrap();
        assert_eq!(a.token_labels, vec![1, 1, 1, 0]);
    }

    #[test]
    fn spelling_differences_are_tolerated() {
        let g = gold(&["the", "cat", "ran"], &[0, 0, 1]);
        let a = align_stress_labels(&g, &tokenize("a hat run")).unwrap();
        assert_eq!(a.aligned().unwrap().token_labels, vec![0, 0, 1]);
    }

    #[test]
    fn aggregation_examples() {
        assert_eq!(aggregate_token_to_word(&[0, 1, 0], &[0, 1, 1]).unwrap(), vec![0, 1]);
        assert_eq!(aggregate_token_to_word(&[0, 0, 0], &[0, 1, 2]).unwrap(), vec![0, 0, 0]);
        assert_eq!(aggregate_token_to_word(&[1, 0, 0], &[0, 0, -1]).unwrap(), vec![1]);
        assert!(aggregate_token_to_word(&[], &[]).unwrap().is_empty());
    }

    #[test]
    fn aggregation_contract_violations() {
        assert!(matches!(
            aggregate_token_to_word(&[0, 1], &[0]),
            Err(CoreError::LengthMismatch { .. })
        ));
        assert!(matches!(
            aggregate_token_to_word(&[0, 1], &[0, 2]),
            Err(CoreError::InvalidWordIndex(_))
        ));
        assert!(matches!(
            aggregate_token_to_word(&[0, 1], &[1, 0]),
            Err(CoreError::InvalidWordIndex(_))
        ));
    }
}
