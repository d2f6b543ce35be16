//! Word-level normalization shared by every stage of the pipeline.
//!
//! Text is split on whitespace, then each chunk is split further so that
//! punctuation characters stand alone. Letters, digits, apostrophes, hyphens
//! and underscores stay glued together, so `"Japan's"` stays one token while
//! `"sympathy."` becomes `["sympathy", "."]`.
//!
//! The separator surface `|` is reserved by the input format and is dropped
//! from raw text. Re-tokenizing the space-joined output of [`tokenize`] gives
//! back the same tokens.

fn is_word_char(c: char) -> bool {
    c.is_alphanumeric() || matches!(c, '\'' | '-' | '_')
}

pub fn tokenize(text: &str) -> Vec<String> {
    let mut tokens = Vec::new();
    for chunk in text.split_whitespace() {
        let mut word = String::new();
        for c in chunk.chars() {
            if is_word_char(c) {
                word.push(c);
                continue;
            }
            if !word.is_empty() {
                tokens.push(std::mem::take(&mut word));
            }
            if c != '|' {
                tokens.push(c.to_string());
            }
        }
        if !word.is_empty() {
            tokens.push(word);
        }
    }
    tokens
}

/// Canonical text form: tokens joined by single spaces.
pub fn join<S: AsRef<str>>(tokens: &[S]) -> String {
    let mut out = String::new();
    for (i, t) in tokens.iter().enumerate() {
        if i > 0 {
            out.push(' ');
        }
        out.push_str(t.as_ref());
    }
    out
}

/// True for tokens without any letter or digit.
pub fn is_punctuation(token: &str) -> bool {
    !token.chars().any(char::is_alphanumeric)
}
