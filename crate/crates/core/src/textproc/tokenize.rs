use std::collections::HashSet;
use std::fmt;
use std::path::Path;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const BUNDLED_STOPLIST: &str = include_str!("../../data/stoplist.txt");
const BUNDLED_PRONOUNS: &str = include_str!("../../data/pronouns.txt");

/// Ordered sequence of normalized terms.
///
/// Every token is non-empty, lowercase and drawn from `[a-z0-9']`.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TokenSequence(Vec<String>);

impl TokenSequence {
    pub fn new(tokens: Vec<String>) -> Self {
        TokenSequence(tokens)
    }

    pub fn tokens(&self) -> &[String] {
        &self.0
    }

    pub fn into_tokens(self) -> Vec<String> {
        self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, String> {
        self.0.iter()
    }

    pub fn extend(&mut self, other: &TokenSequence) {
        self.0.extend(other.0.iter().cloned());
    }

    /// Tokens joined by single spaces.
    pub fn joined(&self) -> String {
        self.0.join(" ")
    }
}

impl fmt::Display for TokenSequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.joined())
    }
}

impl<'a> IntoIterator for &'a TokenSequence {
    type Item = &'a String;
    type IntoIter = std::slice::Iter<'a, String>;

    fn into_iter(self) -> Self::IntoIter {
        self.0.iter()
    }
}

impl From<Vec<&str>> for TokenSequence {
    fn from(tokens: Vec<&str>) -> Self {
        TokenSequence(tokens.into_iter().map(str::to_owned).collect())
    }
}

/// Lowercases `text`, replaces every character outside `[a-z0-9']` with a
/// space and splits on whitespace. Apostrophes at token edges are trimmed and
/// tokens with no alphanumeric character are dropped.
pub fn tokenize(text: &str) -> TokenSequence {
    let normalized: String = text
        .chars()
        .flat_map(char::to_lowercase)
        .map(|c| {
            if c.is_ascii_lowercase() || c.is_ascii_digit() || c == '\'' {
                c
            } else {
                ' '
            }
        })
        .collect();
    let tokens = normalized
        .split_whitespace()
        .map(|t| t.trim_matches('\''))
        .filter(|t| !t.is_empty())
        .map(str::to_owned)
        .collect();
    TokenSequence(tokens)
}

/// A set of words loaded from a one-token-per-line file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WordList {
    words: HashSet<String>,
}

impl WordList {
    pub fn parse(contents: &str) -> Self {
        let words = contents
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .map(str::to_lowercase)
            .collect();
        WordList { words }
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let contents = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(Self::parse(&contents))
    }

    /// The bundled 418-word English stoplist.
    pub fn stoplist() -> &'static WordList {
        static LIST: OnceLock<WordList> = OnceLock::new();
        LIST.get_or_init(|| WordList::parse(BUNDLED_STOPLIST))
    }

    /// The bundled list of third-person and demonstrative pronouns.
    pub fn pronouns() -> &'static WordList {
        static LIST: OnceLock<WordList> = OnceLock::new();
        LIST.get_or_init(|| WordList::parse(BUNDLED_PRONOUNS))
    }

    pub fn contains(&self, word: &str) -> bool {
        self.words.contains(word)
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &str> {
        self.words.iter().map(String::as_str)
    }
}

/// Drops members of the bundled stoplist, preserving order.
pub fn remove_stopwords(ts: &TokenSequence) -> TokenSequence {
    remove_words(ts, WordList::stoplist())
}

pub(crate) fn remove_words(ts: &TokenSequence, list: &WordList) -> TokenSequence {
    TokenSequence(
        ts.iter()
            .filter(|t| !list.contains(t))
            .cloned()
            .collect(),
    )
}

/// The standard processing pipeline: tokenize then remove stopwords.
pub fn process(text: &str) -> TokenSequence {
    remove_stopwords(&tokenize(text))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn empty_input() {
        assert!(tokenize("").is_empty());
        assert!(remove_stopwords(&TokenSequence::default()).is_empty());
    }

    #[test]
    fn strips_punctuation() {
        assert_eq!(
            tokenize("What about for lung cancer?"),
            TokenSequence::from(vec!["what", "about", "for", "lung", "cancer"])
        );
        assert_eq!(
            tokenize("U.S.-based studies!"),
            TokenSequence::from(vec!["u", "s", "based", "studies"])
        );
        assert_eq!(tokenize("What's 'that'?"), TokenSequence::from(vec!["what's", "that"]));
    }

    #[test]
    fn stopping() {
        let ts = TokenSequence::from(vec!["what", "about", "for", "lung", "cancer"]);
        assert_eq!(remove_stopwords(&ts), TokenSequence::from(vec!["lung", "cancer"]));
        assert!(remove_stopwords(&tokenize("what is it about")).is_empty());
    }

    #[test]
    fn bundled_lists() {
        assert_eq!(WordList::stoplist().len(), 418);
        // Substituting a pronoun must never remove a content token.
        for p in WordList::pronouns().iter() {
            assert!(WordList::stoplist().contains(p), "{p} not stopped");
        }
    }

    proptest! {
        #[test]
        fn tokenize_idempotent(s in "\\PC{0,60}") {
            let once = tokenize(&s);
            prop_assert_eq!(tokenize(&once.joined()), once.clone());
            for t in once.iter() {
                prop_assert!(t.chars().all(|c| c.is_ascii_lowercase() || c.is_ascii_digit() || c == '\''));
            }
        }

        #[test]
        fn stopping_idempotent(s in "[a-zA-Z ,.?']{0,80}") {
            let once = remove_stopwords(&tokenize(&s));
            prop_assert_eq!(remove_stopwords(&once), once);
        }
    }
}
