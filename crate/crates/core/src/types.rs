use serde::{Deserialize, Serialize};

use crate::error::CoreError;

/// Minimum words for a sentence to enter the corpus.
pub const MIN_WORDS: usize = 3;

/// A sentence with one binary stress label per word.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StressAnnotatedSentence {
    id: String,
    text: String,
    words: Vec<String>,
    stress: Vec<u8>,
    variant: u8,
}

impl StressAnnotatedSentence {
    /// Validates every invariant, including the three-word minimum.
    pub fn new(
        id: impl Into<String>,
        text: impl Into<String>,
        words: &[impl AsRef<str>],
        stress: &[u8],
        variant: u8,
    ) -> Result<Self, CoreError> {
        if words.len() < MIN_WORDS {
            return Err(CoreError::InvalidSentence(format!(
                "{} words, at least {MIN_WORDS} required",
                words.len()
            )));
        }
        Self::new_relaxed(id, text, words, stress, variant)
    }

    /// Like [`Self::new`] without the minimum word count.
    pub fn new_relaxed(
        id: impl Into<String>,
        text: impl Into<String>,
        words: &[impl AsRef<str>],
        stress: &[u8],
        variant: u8,
    ) -> Result<Self, CoreError> {
        if words.len() != stress.len() {
            return Err(CoreError::LengthMismatch {
                what: "words vs stress",
                left: words.len(),
                right: stress.len(),
            });
        }
        for w in words {
            let w = w.as_ref();
            if w.is_empty() || w.chars().any(char::is_whitespace) {
                return Err(CoreError::InvalidSentence(format!("bad word {w:?}")));
            }
        }
        if stress.iter().any(|&s| s > 1) {
            return Err(CoreError::InvalidSentence("stress labels must be 0 or 1".into()));
        }
        if variant > 1 {
            return Err(CoreError::InvalidSentence(format!("variant {variant} not in {{0,1}}")));
        }
        Ok(Self {
            id: id.into(),
            text: text.into(),
            words: words.iter().map(|w| w.as_ref().to_string()).collect(),
            stress: stress.to_vec(),
            variant,
        })
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn text(&self) -> &str {
        &self.text
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }

    pub fn stress(&self) -> &[u8] {
        &self.stress
    }

    pub fn variant(&self) -> u8 {
        self.variant
    }

    pub fn stressed_words(&self) -> impl Iterator<Item = &str> {
        self.words
            .iter()
            .zip(&self.stress)
            .filter(|(_, &s)| s == 1)
            .map(|(w, _)| w.as_str())
    }
}

/// Per-word system output, optionally paired with gold labels.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WordPrediction {
    pub words: Vec<String>,
    pub predicted: Vec<u8>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gold: Option<Vec<u8>>,
}

impl WordPrediction {
    pub fn new(words: Vec<String>, predicted: Vec<u8>, gold: Option<Vec<u8>>) -> Result<Self, CoreError> {
        if words.len() != predicted.len() {
            return Err(CoreError::LengthMismatch {
                what: "words vs predicted",
                left: words.len(),
                right: predicted.len(),
            });
        }
        if let Some(g) = &gold {
            if g.len() != words.len() {
                return Err(CoreError::LengthMismatch {
                    what: "words vs gold",
                    left: words.len(),
                    right: g.len(),
                });
            }
        }
        Ok(Self {
            words,
            predicted,
            gold,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_broken_sentences() {
        assert!(StressAnnotatedSentence::new("a", "x y", &["x", "y"], &[0, 1], 0).is_err());
        assert!(StressAnnotatedSentence::new("a", "x y z", &["x", "y", "z"], &[0, 1], 0).is_err());
        assert!(StressAnnotatedSentence::new("a", "x  z", &["x", "", "z"], &[0, 1, 0], 0).is_err());
        assert!(StressAnnotatedSentence::new("a", "x y z", &["x", "y", "z"], &[0, 2, 0], 0).is_err());
        let ok = StressAnnotatedSentence::new("a", "x y z", &["x", "y", "z"], &[0, 1, 0], 1).unwrap();
        assert_eq!(ok.stressed_words().collect::<Vec<_>>(), vec!["y"]);
    }

    #[test]
    fn word_prediction_lengths() {
        assert!(WordPrediction::new(vec!["a".into()], vec![], None).is_err());
        assert!(WordPrediction::new(vec!["a".into()], vec![1], Some(vec![0, 1])).is_err());
    }
}
