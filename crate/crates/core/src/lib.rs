//! Shared domain types for stress-annotated speech: sentence segmentation,
//! the subword tokenizer with its token→word map, label alignment between
//! gold words and hypothesis tokens, token→word aggregation and the JSONL
//! dataset record.

pub mod align;
pub mod audio;
pub mod error;
pub mod manifest;
pub mod metrics;
pub mod seed;
pub mod text;
pub mod types;

pub use align::{aggregate_token_to_word, align_stress_labels, AlignOutcome, TokenAlignment};
pub use error::CoreError;
pub use manifest::{read_manifest, write_manifest, DatasetRecord};
pub use metrics::{f1_score, precision_recall_f1, Metrics};
pub use text::{split_into_sentences, tokenize, word_index_of_tokens, words, Tokenized, NO_WORD};
pub use types::{StressAnnotatedSentence, WordPrediction, MIN_WORDS};
