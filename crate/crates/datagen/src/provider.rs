//! Stress-word selection: the deterministic rule-based provider and the
//! request/response contract for a remote LLM labeler.

use std::thread;
use std::time::Duration;

use serde::{Deserialize, Serialize};

/// Function words never chosen by the rule-based provider.
pub const STOPWORDS: &[&str] = &[
    "a", "about", "after", "all", "am", "an", "and", "are", "as", "at", "be", "been", "but", "by",
    "can", "could", "did", "do", "does", "down", "for", "from", "had", "has", "have", "he", "her",
    "him", "his", "i", "if", "in", "into", "is", "it", "its", "just", "me", "my", "no", "not", "of",
    "on", "or", "our", "over", "she", "so", "some", "than", "that", "the", "their", "them", "then",
    "there", "these", "they", "this", "those", "to", "too", "under", "up", "us", "very", "was",
    "we", "were", "will", "with", "would", "you", "your",
];

pub fn is_stopword(word: &str) -> bool {
    let lower = word.to_lowercase();
    STOPWORDS.contains(&lower.as_str())
}

/// Two alternative per-word labelings of one sentence.
pub type StressOptions = [Vec<u8>; 2];

#[derive(Debug, thiserror::Error)]
pub enum ProviderError {
    #[error("provider failed for sentence {sentence_id} (retryable): {message}")]
    Retryable { sentence_id: String, message: String },
    #[error("provider failed for sentence {sentence_id}: {message}")]
    Fatal { sentence_id: String, message: String },
}

pub trait StressLabelProvider: Sync {
    /// Returns two distinct labelings, or `Ok(None)` when the sentence has
    /// no word worth stressing.
    fn label(&self, sentence_id: &str, words: &[String]) -> Result<Option<StressOptions>, ProviderError>;
}

/// Variant 0 stresses the longest non-stopword; variant 1 the last
/// non-stopword at a different position. Ties go to the earliest word.
/// A sentence with a single content word gets the last other word as its
/// second option.
#[derive(Debug, Clone, Copy, Default)]
pub struct RuleBasedProvider;

impl RuleBasedProvider {
    pub fn choose(words: &[String]) -> Option<(usize, usize)> {
        let content: Vec<usize> = (0..words.len()).filter(|&i| !is_stopword(&words[i])).collect();
        let first = *content
            .iter()
            .min_by_key(|&&i| (std::cmp::Reverse(words[i].chars().count()), i))?;
        let second = content
            .iter()
            .rev()
            .copied()
            .find(|&i| i != first)
            .or_else(|| (0..words.len()).rev().find(|&i| i != first))?;
        Some((first, second))
    }
}

impl StressLabelProvider for RuleBasedProvider {
    fn label(&self, _sentence_id: &str, words: &[String]) -> Result<Option<StressOptions>, ProviderError> {
        Ok(Self::choose(words).map(|(a, b)| {
            let mut v0 = vec![0; words.len()];
            let mut v1 = vec![0; words.len()];
            v0[a] = 1;
            v1[b] = 1;
            [v0, v1]
        }))
    }
}

/// Chat-style request sent to a remote labeler.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StressRequest {
    pub model: String,
    pub sentence_id: String,
    pub instructions: String,
    pub sentence: String,
}

/// Expected JSON reply: the stressed words of each option, in sentence order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StressResponse {
    pub option_1: Vec<String>,
    pub option_2: Vec<String>,
}

#[derive(Debug, thiserror::Error)]
pub enum TransportError {
    #[error("transient: {0}")]
    Transient(String),
    #[error("permanent: {0}")]
    Permanent(String),
}

/// Sends a request and returns the raw reply body.
pub trait ChatTransport: Sync {
    fn complete(&self, request: &StressRequest) -> Result<String, TransportError>;
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RetryPolicy {
    pub max_attempts: u32,
    pub base_delay: Duration,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        Self {
            max_attempts: 4,
            base_delay: Duration::from_millis(500),
        }
    }
}

impl RetryPolicy {
    /// Delay before retry number `attempt` (1-based): base · 2^(attempt-1).
    pub fn delay(&self, attempt: u32) -> Duration {
        self.base_delay * 2u32.saturating_pow(attempt.saturating_sub(1))
    }
}

pub const LABELING_INSTRUCTIONS: &str = "Provide two different options for which words in the \
sentence a speaker would stress so that the stress changes its interpretation in a semantically \
significant way. Reply with JSON {\"option_1\": [words], \"option_2\": [words]}.";

pub struct RemoteLlmProvider<T> {
    pub transport: T,
    pub model: String,
    pub retry: RetryPolicy,
}

impl<T: ChatTransport> RemoteLlmProvider<T> {
    pub fn new(transport: T, model: impl Into<String>) -> Self {
        Self {
            transport,
            model: model.into(),
            retry: RetryPolicy::default(),
        }
    }

    fn request(&self, sentence_id: &str, words: &[String]) -> StressRequest {
        StressRequest {
            model: self.model.clone(),
            sentence_id: sentence_id.to_string(),
            instructions: LABELING_INSTRUCTIONS.to_string(),
            sentence: words.join(" "),
        }
    }
}

/// Marks each listed word at the first unused case-insensitive match.
fn mark(words: &[String], stressed: &[String]) -> Option<Vec<u8>> {
    let mut labels = vec![0u8; words.len()];
    for s in stressed {
        let pos = (0..words.len()).find(|&i| labels[i] == 0 && words[i].eq_ignore_ascii_case(s))?;
        labels[pos] = 1;
    }
    Some(labels)
}

impl<T: ChatTransport> StressLabelProvider for RemoteLlmProvider<T> {
    fn label(&self, sentence_id: &str, words: &[String]) -> Result<Option<StressOptions>, ProviderError> {
        let request = self.request(sentence_id, words);
        let mut last = String::new();
        for attempt in 1..=self.retry.max_attempts {
            if attempt > 1 {
                thread::sleep(self.retry.delay(attempt - 1));
            }
            let body = match self.transport.complete(&request) {
                Ok(body) => body,
                Err(TransportError::Transient(m)) => {
                    last = m;
                    continue;
                }
                Err(TransportError::Permanent(m)) => {
                    return Err(ProviderError::Fatal {
                        sentence_id: sentence_id.to_string(),
                        message: m,
                    })
                }
            };
            let parsed: StressResponse = match serde_json::from_str(&body) {
                Ok(p) => p,
                Err(e) => {
                    last = format!("unparseable reply: {e}");
                    continue;
                }
            };
            let (Some(a), Some(b)) = (mark(words, &parsed.option_1), mark(words, &parsed.option_2)) else {
                last = "reply names words absent from the sentence".to_string();
                continue;
            };
            if !a.contains(&1) || !b.contains(&1) || a == b {
                return Ok(None);
            }
            return Ok(Some([a, b]));
        }
        Err(ProviderError::Retryable {
            sentence_id: sentence_id.to_string(),
            message: last,
        })
    }
}
