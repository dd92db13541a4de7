use std::collections::{BTreeMap, HashMap, HashSet};

use serde::{Deserialize, Serialize};

use super::tokenize::{process, TokenSequence};
use crate::error::{Error, Result};

/// Document-frequency statistics over an utterance collection.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DocFreqStats {
    n: usize,
    df: HashMap<String, usize>,
}

impl DocFreqStats {
    /// Builds statistics over processed (tokenized, stopped) utterances.
    pub fn build<S: AsRef<str>>(utterances: &[S]) -> Self {
        let mut stats = DocFreqStats::default();
        for u in utterances {
            stats.add(&process(u.as_ref()));
        }
        stats
    }

    pub fn add(&mut self, tokens: &TokenSequence) {
        self.n += 1;
        let unique: HashSet<&String> = tokens.iter().collect();
        for t in unique {
            *self.df.entry(t.clone()).or_default() += 1;
        }
    }

    pub fn num_docs(&self) -> usize {
        self.n
    }

    /// Unseen terms report `N`, which gives them zero weight.
    pub fn df(&self, term: &str) -> usize {
        self.df.get(term).copied().unwrap_or(self.n)
    }

    pub fn idf(&self, term: &str) -> f64 {
        let df = self.df(term);
        if df == 0 || self.n == 0 {
            return 0.0;
        }
        (self.n as f64 / df as f64).ln()
    }
}

/// Sparse non-negative term weights with a cached Euclidean norm.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TermVector {
    entries: BTreeMap<String, f64>,
    norm: f64,
}

impl TermVector {
    /// Zero weights are dropped.
    pub fn from_entries(entries: impl IntoIterator<Item = (String, f64)>) -> Self {
        let entries: BTreeMap<String, f64> = entries.into_iter().filter(|(_, w)| *w != 0.0).collect();
        let norm = entries.values().map(|w| w * w).sum::<f64>().sqrt();
        TermVector { entries, norm }
    }

    pub fn get(&self, term: &str) -> f64 {
        self.entries.get(term).copied().unwrap_or(0.0)
    }

    pub fn entries(&self) -> &BTreeMap<String, f64> {
        &self.entries
    }

    pub fn norm(&self) -> f64 {
        self.norm
    }

    pub fn is_zero(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn dot(&self, other: &TermVector) -> f64 {
        let (small, large) = if self.entries.len() <= other.entries.len() {
            (self, other)
        } else {
            (other, self)
        };
        small
            .entries
            .iter()
            .map(|(t, w)| w * large.get(t))
            .sum()
    }
}

/// `tf(t) · ln(N / df(t))` over the processed tokens of `text`.
pub fn tfidf(text: &str, stats: &DocFreqStats) -> TermVector {
    tfidf_tokens(&process(text), stats)
}

pub fn tfidf_tokens(tokens: &TokenSequence, stats: &DocFreqStats) -> TermVector {
    let mut tf: BTreeMap<&str, usize> = BTreeMap::new();
    for t in tokens {
        *tf.entry(t.as_str()).or_default() += 1;
    }
    TermVector::from_entries(
        tf.into_iter()
            .map(|(t, c)| (t.to_owned(), c as f64 * stats.idf(t))),
    )
}

/// Cosine similarity between two vectors of the same kind.
pub trait Cosine {
    fn cosine(&self, other: &Self) -> Result<f64>;
}

fn finish(dot: f64, na: f64, nb: f64) -> Result<f64> {
    match (na == 0.0, nb == 0.0) {
        (true, true) => Err(Error::UndefinedSimilarity),
        (true, false) | (false, true) => Ok(0.0),
        _ => Ok((dot / (na * nb)).clamp(-1.0, 1.0)),
    }
}

impl Cosine for TermVector {
    fn cosine(&self, other: &Self) -> Result<f64> {
        finish(self.dot(other), self.norm, other.norm)
    }
}

impl Cosine for [f64] {
    fn cosine(&self, other: &Self) -> Result<f64> {
        if self.len() != other.len() {
            return Err(Error::DimensionMismatch {
                left: self.len(),
                right: other.len(),
            });
        }
        let dot = self.iter().zip(other).map(|(a, b)| a * b).sum();
        let na = self.iter().map(|a| a * a).sum::<f64>().sqrt();
        let nb = other.iter().map(|b| b * b).sum::<f64>().sqrt();
        finish(dot, na, nb)
    }
}

impl Cosine for Vec<f64> {
    fn cosine(&self, other: &Self) -> Result<f64> {
        self.as_slice().cosine(other.as_slice())
    }
}

/// `dot(a, b) / (‖a‖‖b‖)`. A zero vector against a non-zero one gives 0;
/// two zero vectors are an error.
pub fn cosine<V: Cosine + ?Sized>(a: &V, b: &V) -> Result<f64> {
    a.cosine(b)
}
