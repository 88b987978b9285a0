//! Small word-level helpers shared by the filters, the heuristic scorer and
//! the corpus statistics.

use alloc::string::String;

/// Trims leading and trailing characters that are not alphanumeric.
pub fn strip_punct(word: &str) -> &str {
    word.trim_matches(|c: char| !c.is_alphanumeric())
}

/// Lowercased, punctuation-trimmed form of a whitespace token. Empty when the
/// token is pure punctuation.
pub fn normalize_word(word: &str) -> String {
    strip_punct(word).to_lowercase()
}

/// Whitespace tokens of `text`, normalized, with pure-punctuation tokens
/// removed.
pub fn normalized_words(text: &str) -> impl Iterator<Item = String> + '_ {
    text.split_whitespace()
        .map(normalize_word)
        .filter(|w| !w.is_empty())
}
