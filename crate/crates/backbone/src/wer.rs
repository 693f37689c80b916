//! Word error counting for recognizer accuracy.

use stress_core::words;

/// Levenshtein distance over word sequences.
pub fn word_edits<S: AsRef<str>>(reference: &[S], hypothesis: &[S]) -> usize {
    let mut prev: Vec<usize> = (0..=hypothesis.len()).collect();
    let mut cur = vec![0; hypothesis.len() + 1];
    for (i, r) in reference.iter().enumerate() {
        cur[0] = i + 1;
        for (j, h) in hypothesis.iter().enumerate() {
            let sub = prev[j] + usize::from(r.as_ref() != h.as_ref());
            cur[j + 1] = sub.min(prev[j + 1] + 1).min(cur[j] + 1);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[hypothesis.len()]
}

/// Corpus-level `1 − WER` over the word sequences of paired texts,
/// clipped at zero.
pub fn word_accuracy<'a>(pairs: impl IntoIterator<Item = (&'a str, &'a str)>) -> f64 {
    let (mut edits, mut total) = (0usize, 0usize);
    for (reference, hypothesis) in pairs {
        let r = words(reference);
        let h = words(hypothesis);
        edits += word_edits(&r, &h);
        total += r.len();
    }
    if total == 0 {
        return 0.0;
    }
    (1.0 - edits as f64 / total as f64).max(0.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn edit_distance_examples() {
        assert_eq!(word_edits(&["a", "b", "c"], &["a", "b", "c"]), 0);
        assert_eq!(word_edits(&["a", "b", "c"], &["a", "c"]), 1);
        assert_eq!(word_edits(&["a", "b"], &["x", "a", "b"]), 1);
        assert_eq!(word_edits::<&str>(&[], &["x"]), 1);
        assert_eq!(word_edits(&["a", "b"], &["b", "a"]), 2);
    }

    #[test]
    fn accuracy_ignores_punctuation() {
        assert_eq!(word_accuracy([("Tom ran home.", "Tom ran home")]), 1.0);
        assert!((word_accuracy([("Tom ran home.", "Tom ran")]) - 2.0 / 3.0).abs() < 1e-12);
        assert_eq!(word_accuracy([("a b", "x y z w v")]), 0.0);
    }
}
