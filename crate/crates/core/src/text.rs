//! Sentence segmentation, word extraction and the subword tokenizer.

/// Abbreviations whose trailing period never ends a sentence.
pub const ABBREVIATIONS: [&str; 5] = ["Mr", "Mrs", "Dr", "Ms", "St"];

/// Words longer than this many characters are split into chunks.
pub const SPLIT_THRESHOLD: usize = 6;
/// Maximum characters per subword chunk.
pub const CHUNK_LEN: usize = 4;

/// Marker for tokens that belong to no word (punctuation, stray whitespace).
pub const NO_WORD: i32 = -1;

fn is_apostrophe(c: char) -> bool {
    c == '\'' || c == '\u{2019}'
}

fn is_terminal(c: char) -> bool {
    matches!(c, '.' | '!' | '?')
}

fn is_closer(c: char) -> bool {
    matches!(c, '"' | '\'' | ')' | ']' | '\u{201d}' | '\u{2019}')
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum PieceKind {
    Word,
    Punct,
}

/// A maximal word or a single punctuation character, as a byte range.
#[derive(Debug, Clone, Copy)]
struct Piece {
    kind: PieceKind,
    start: usize,
    end: usize,
}

/// Splits `text` into word pieces (alphanumeric runs with internal
/// apostrophes) and single-character punctuation pieces. Whitespace is
/// skipped.
fn pieces(text: &str) -> Vec<Piece> {
    let chars: Vec<(usize, char)> = text.char_indices().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let (start, c) = chars[i];
        if c.is_whitespace() {
            i += 1;
        } else if c.is_alphanumeric() {
            let mut j = i + 1;
            while j < chars.len() {
                let cj = chars[j].1;
                let internal_apostrophe = is_apostrophe(cj)
                    && chars.get(j + 1).is_some_and(|&(_, n)| n.is_alphanumeric());
                if cj.is_alphanumeric() {
                    j += 1;
                } else if internal_apostrophe {
                    j += 2;
                } else {
                    break;
                }
            }
            let end = chars.get(j).map_or(text.len(), |&(b, _)| b);
            out.push(Piece {
                kind: PieceKind::Word,
                start,
                end,
            });
            i = j;
        } else {
            out.push(Piece {
                kind: PieceKind::Punct,
                start,
                end: start + c.len_utf8(),
            });
            i += 1;
        }
    }
    out
}

/// Words of `text`: maximal alphanumeric runs, keeping internal apostrophes.
pub fn words(text: &str) -> Vec<&str> {
    pieces(text)
        .into_iter()
        .filter(|p| p.kind == PieceKind::Word)
        .map(|p| &text[p.start..p.end])
        .collect()
}

pub fn word_count(text: &str) -> usize {
    pieces(text)
        .iter()
        .filter(|p| p.kind == PieceKind::Word)
        .count()
}

/// Segments prose into sentences at `.`, `!` and `?`, keeping only those
/// with at least three words. A single period after one of
/// [`ABBREVIATIONS`] is not a boundary. Internal whitespace is collapsed.
pub fn split_into_sentences(text: &str) -> Vec<String> {
    let chars: Vec<(usize, char)> = text.char_indices().collect();
    let mut sentences = Vec::new();
    let mut start = 0usize;
    let mut i = 0usize;
    while i < chars.len() {
        let (pos, c) = chars[i];
        if !is_terminal(c) {
            i += 1;
            continue;
        }
        let mut j = i;
        while j < chars.len() && is_terminal(chars[j].1) {
            j += 1;
        }
        while j < chars.len() && is_closer(chars[j].1) {
            j += 1;
        }
        let at_gap = j == chars.len() || chars[j].1.is_whitespace();
        let single_period = c == '.' && (i + 1 == chars.len() || !is_terminal(chars[i + 1].1));
        let abbreviation = single_period && {
            let before = &text[start..pos];
            let tail = before
                .rsplit(|ch: char| !ch.is_alphanumeric())
                .next()
                .unwrap_or("");
            ABBREVIATIONS.contains(&tail)
        };
        if at_gap && !abbreviation {
            let end = chars.get(j).map_or(text.len(), |&(b, _)| b);
            push_sentence(&mut sentences, &text[start..end]);
            start = end;
        }
        i = j;
    }
    if start < text.len() {
        push_sentence(&mut sentences, &text[start..]);
    }
    sentences
}

fn push_sentence(out: &mut Vec<String>, raw: &str) {
    let normalized = raw.split_whitespace().collect::<Vec<_>>().join(" ");
    if word_count(&normalized) >= 3 {
        out.push(normalized);
    }
}

/// Subword tokens of a text together with the word each token belongs to.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Tokenized {
    pub tokens: Vec<String>,
    /// Word position per token, [`NO_WORD`] for non-word tokens.
    pub word_index: Vec<i32>,
}

impl Tokenized {
    pub fn word_count(&self) -> usize {
        self.word_index
            .iter()
            .copied()
            .max()
            .map_or(0, |m| (m + 1).max(0) as usize)
    }

    /// Concatenation of all tokens; equals the tokenized input.
    pub fn detokenize(&self) -> String {
        self.tokens.concat()
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }
}

/// Whitespace-and-punctuation tokenizer with word mapping.
///
/// Whitespace preceding a piece is carried as a prefix of that piece's
/// first token, so concatenating the tokens reproduces the input exactly.
/// Punctuation becomes its own token with [`NO_WORD`]. Words longer than
/// [`SPLIT_THRESHOLD`] characters are cut into chunks of at most
/// [`CHUNK_LEN`] characters that share the word's index.
pub fn tokenize(text: &str) -> Tokenized {
    let mut tokens = Vec::new();
    let mut word_index = Vec::new();
    let mut cursor = 0;
    let mut next_word = 0i32;
    for piece in pieces(text) {
        let prefix = &text[cursor..piece.start];
        let body = &text[piece.start..piece.end];
        cursor = piece.end;
        match piece.kind {
            PieceKind::Punct => {
                tokens.push(format!("{prefix}{body}"));
                word_index.push(NO_WORD);
            }
            PieceKind::Word => {
                let chars: Vec<char> = body.chars().collect();
                if chars.len() > SPLIT_THRESHOLD {
                    for (k, chunk) in chars.chunks(CHUNK_LEN).enumerate() {
                        let chunk: String = chunk.iter().collect();
                        let p = if k == 0 { prefix } else { "" };
                        tokens.push(format!("{p}{chunk}"));
                        word_index.push(next_word);
                    }
                } else {
                    tokens.push(format!("{prefix}{body}"));
                    word_index.push(next_word);
                }
                next_word += 1;
            }
        }
    }
    if cursor < text.len() {
        tokens.push(text[cursor..].to_string());
        word_index.push(NO_WORD);
    }
    Tokenized { tokens, word_index }
}

/// Recovers the word map of a token sequence produced by a decoder.
///
/// A token containing an alphanumeric character starts a new word when it
/// carries leading whitespace or follows a non-word token; otherwise it
/// continues the previous word. Other tokens map to [`NO_WORD`]. On the
/// output of [`tokenize`] this reproduces its `word_index`.
pub fn word_index_of_tokens<S: AsRef<str>>(tokens: &[S]) -> Vec<i32> {
    let mut out = Vec::with_capacity(tokens.len());
    let mut current = NO_WORD;
    let mut prev_is_word = false;
    for tok in tokens {
        let tok = tok.as_ref();
        let body = tok.trim_start();
        if body.chars().any(char::is_alphanumeric) {
            let starts_word = !prev_is_word || body.len() != tok.len();
            if starts_word {
                current += 1;
            }
            out.push(current);
            prev_is_word = true;
        } else {
            out.push(NO_WORD);
            prev_is_word = false;
        }
    }
    out
}
