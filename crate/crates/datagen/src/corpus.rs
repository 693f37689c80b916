//! Seeded toy prose used as the offline sentence source.
//!
//! Sentences follow a small subject–verb–object–adverbial grammar over a
//! fixed vocabulary, so every word of a held-out sentence has been heard in
//! training while word combinations stay new.

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const SUBJECTS: &[&str] = &[
    "Tom", "Anna", "Ben", "Lily", "Max", "Sara", "The dog", "The cat", "The little bird",
    "My sister", "His brother", "The farmer", "A tiny mouse", "The teacher", "Grandpa",
    "The children", "Our neighbor", "The old wizard", "A brave knight", "The baker",
];

const VERBS: &[&str] = &[
    "found", "painted", "carried", "watched", "wanted", "opened", "cooked", "planted", "dropped",
    "hid", "saw", "fixed", "liked", "shared", "pushed", "cleaned", "bought", "chased", "built",
    "lost",
];

const OBJECTS: &[&str] = &[
    "a red ball", "the big box", "a wooden boat", "the garden gate", "some apples",
    "a beautiful flower", "the yellow kite", "a warm blanket", "the shiny coin",
    "a chocolate cake", "the broken window", "a small puppy", "the secret door", "an orange",
    "the heavy basket", "a funny hat", "the blue bicycle", "a magic stone", "the picture",
    "a paper plane",
];

const ADVERBIALS: &[&str] = &[
    "today", "yesterday", "at home", "after school", "near the river", "in the morning",
    "very quickly", "with a smile", "before dinner", "in the forest", "at the market",
    "together", "again", "slowly",
];

fn capitalize(s: &str) -> String {
    let mut c = s.chars();
    match c.next() {
        Some(first) => first.to_uppercase().chain(c).collect(),
        None => String::new(),
    }
}

/// One sentence such as "The farmer planted some apples near the river."
pub fn toy_sentence<R: Rng>(rng: &mut R) -> String {
    let subject = SUBJECTS.choose(rng).expect("non-empty");
    let verb = VERBS.choose(rng).expect("non-empty");
    let object = OBJECTS.choose(rng).expect("non-empty");
    let mut s = format!("{} {verb} {object}", capitalize(subject));
    if rng.random_bool(0.5) {
        s.push(' ');
        s.push_str(ADVERBIALS.choose(rng).expect("non-empty"));
    }
    s.push('.');
    s
}

/// `n` distinct sentences as one paragraph of prose.
pub fn toy_text(n: usize, seed: u64) -> String {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut seen = std::collections::HashSet::new();
    let mut out = Vec::with_capacity(n);
    let mut attempts = 0;
    while out.len() < n && attempts < n * 50 {
        attempts += 1;
        let s = toy_sentence(&mut rng);
        if seen.insert(s.clone()) {
            out.push(s);
        }
    }
    out.join(" ")
}

/// Every distinct word form the grammar can produce.
pub fn toy_vocabulary() -> Vec<String> {
    let mut v: Vec<String> = SUBJECTS
        .iter()
        .chain(VERBS)
        .chain(OBJECTS)
        .chain(ADVERBIALS)
        .flat_map(|p| p.split_whitespace())
        .flat_map(|w| [w.to_string(), capitalize(w)])
        .collect();
    v.sort();
    v.dedup();
    v
}
