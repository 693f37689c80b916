//! Closed token inventory built from training transcripts.

use std::collections::{BTreeSet, HashMap};

use serde::{Deserialize, Serialize};
use stress_core::tokenize;

pub const BOS: u32 = 0;
pub const EOS: u32 = 1;
pub const UNK: u32 = 2;
const SPECIALS: [&str; 3] = ["<bos>", "<eos>", "<unk>"];

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(from = "VocabRepr", into = "VocabRepr")]
pub struct Vocabulary {
    tokens: Vec<String>,
    index: HashMap<String, u32>,
}

#[derive(Serialize, Deserialize)]
struct VocabRepr {
    tokens: Vec<String>,
}

impl From<VocabRepr> for Vocabulary {
    fn from(r: VocabRepr) -> Self {
        Self::from_tokens(r.tokens)
    }
}

impl From<Vocabulary> for VocabRepr {
    fn from(v: Vocabulary) -> Self {
        Self { tokens: v.tokens }
    }
}

impl PartialEq for Vocabulary {
    fn eq(&self, other: &Self) -> bool {
        self.tokens == other.tokens
    }
}

impl Vocabulary {
    fn from_tokens(tokens: Vec<String>) -> Self {
        let index = tokens
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i as u32))
            .collect();
        Self { tokens, index }
    }

    /// Special tokens followed by every distinct token of `texts` in
    /// lexicographic order.
    pub fn from_texts<'a>(texts: impl IntoIterator<Item = &'a str>) -> Self {
        let mut set = BTreeSet::new();
        for text in texts {
            set.extend(tokenize(text).tokens);
        }
        let tokens = SPECIALS
            .iter()
            .map(|s| s.to_string())
            .chain(set.into_iter().filter(|t| !SPECIALS.contains(&t.as_str())))
            .collect();
        Self::from_tokens(tokens)
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.len() <= SPECIALS.len()
    }

    pub fn token(&self, id: u32) -> &str {
        &self.tokens[id as usize]
    }

    pub fn id(&self, token: &str) -> Option<u32> {
        self.index.get(token).copied()
    }

    pub fn is_special(id: u32) -> bool {
        (id as usize) < SPECIALS.len()
    }

    pub fn encode(&self, text: &str) -> Vec<u32> {
        tokenize(text)
            .tokens
            .iter()
            .map(|t| self.id(t).unwrap_or(UNK))
            .collect()
    }

    /// Token strings of `ids` with special tokens dropped.
    pub fn token_strings(&self, ids: &[u32]) -> Vec<String> {
        ids.iter()
            .filter(|&&i| !Self::is_special(i))
            .map(|&i| self.tokens[i as usize].clone())
            .collect()
    }

    pub fn decode(&self, ids: &[u32]) -> String {
        self.token_strings(ids).concat().trim_start().to_string()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_and_unknowns() {
        let v = Vocabulary::from_texts(["Tom ran home.", "The cat ran away."]);
        assert_eq!(v.token(BOS), "<bos>");
        let ids = v.encode("Tom ran away.");
        assert!(!ids.contains(&UNK));
        assert_eq!(v.decode(&ids), "Tom ran away.");
        assert!(v.encode("Zed ran").contains(&UNK));
        let json = serde_json::to_string(&v).unwrap();
        let back: Vocabulary = serde_json::from_str(&json).unwrap();
        assert_eq!(back, v);
        assert_eq!(back.id(" ran"), v.id(" ran"));
    }
}
