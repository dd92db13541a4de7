//! Pair features `[cos(u_i, u_j), i, j, i − j]` for the classical
//! classifiers.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::pairs::CandidatePair;
use crate::conversation::Topic;
use crate::error::{Error, Result};
use crate::textproc::{awe, cosine, tfidf, DocFreqStats, EmbeddingTable};

pub const FEATURE_DIM: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FeatureKind {
    Tfidf,
    Awe,
}

impl fmt::Display for FeatureKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FeatureKind::Tfidf => "tfidf",
            FeatureKind::Awe => "awe",
        })
    }
}

impl FromStr for FeatureKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "tfidf" | "tf-idf" => Ok(FeatureKind::Tfidf),
            "awe" => Ok(FeatureKind::Awe),
            _ => Err(Error::InvalidInput(format!("unknown feature kind `{s}`"))),
        }
    }
}

/// Source of the utterance vectors behind the cosine feature.
#[derive(Debug, Clone)]
pub enum Featurizer {
    Tfidf(DocFreqStats),
    Awe(EmbeddingTable),
}

impl Featurizer {
    /// TF-IDF statistics over every utterance of `topics`, one document per
    /// utterance.
    pub fn tfidf_over(topics: &[Topic]) -> Self {
        let utterances: Vec<&str> = topics
            .iter()
            .flat_map(|t| t.turns.iter().map(|u| u.raw_utterance.as_str()))
            .collect();
        Featurizer::Tfidf(DocFreqStats::build(&utterances))
    }

    pub fn kind(&self) -> FeatureKind {
        match self {
            Featurizer::Tfidf(_) => FeatureKind::Tfidf,
            Featurizer::Awe(_) => FeatureKind::Awe,
        }
    }

    /// Cosine between the two utterances; 0 when both vectors are empty.
    pub fn similarity(&self, a: &str, b: &str) -> Result<f64> {
        let r = match self {
            Featurizer::Tfidf(stats) => cosine(&tfidf(a, stats), &tfidf(b, stats)),
            Featurizer::Awe(table) => cosine(&awe(a, table).vector, &awe(b, table).vector),
        };
        match r {
            Err(Error::UndefinedSimilarity) => Ok(0.0),
            other => other,
        }
    }

    pub fn features(&self, pair: &CandidatePair) -> Result<Vec<f64>> {
        let (i, j) = (pair.i as f64, pair.j as f64);
        Ok(vec![self.similarity(&pair.u_i, &pair.u_j)?, i, j, i - j])
    }

    pub fn matrix(&self, pairs: &[CandidatePair]) -> Result<Vec<Vec<f64>>> {
        pairs.iter().map(|p| self.features(p)).collect()
    }
}

/// Labeled feature rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub x: Vec<Vec<f64>>,
    pub y: Vec<usize>,
}

impl Dataset {
    pub fn new(x: Vec<Vec<f64>>, y: Vec<usize>) -> Result<Self> {
        if x.len() != y.len() {
            return Err(Error::InvalidInput(format!("{} rows but {} labels", x.len(), y.len())));
        }
        if let Some(w) = x.first().map(Vec::len) {
            if let Some(bad) = x.iter().find(|r| r.len() != w) {
                return Err(Error::DimensionMismatch { left: w, right: bad.len() });
            }
        }
        if y.iter().any(|&l| l > 1) {
            return Err(Error::InvalidInput("labels must be 0 or 1".into()));
        }
        Ok(Dataset { x, y })
    }

    /// Featurizes the labeled pairs; unlabeled pairs are skipped.
    pub fn from_pairs(pairs: &[CandidatePair], featurizer: &Featurizer) -> Result<Self> {
        let mut x = Vec::new();
        let mut y = Vec::new();
        for p in pairs {
            if let Some(t) = p.target() {
                x.push(featurizer.features(p)?);
                y.push(t);
            }
        }
        Dataset::new(x, y)
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.x.first().map_or(0, Vec::len)
    }

    pub fn positives(&self) -> usize {
        self.y.iter().filter(|&&l| l == 1).count()
    }

    /// Both classes present, as the trainable classifiers require.
    pub fn require_two_classes(&self) -> Result<()> {
        let pos = self.positives();
        if pos == 0 || pos == self.len() {
            return Err(Error::Training(format!(
                "training data must contain both classes ({pos} positive of {})",
                self.len()
            )));
        }
        Ok(())
    }

    pub fn subset(&self, idx: &[usize]) -> Dataset {
        Dataset {
            x: idx.iter().map(|&i| self.x[i].clone()).collect(),
            y: idx.iter().map(|&i| self.y[i]).collect(),
        }
    }
}

/// Per-column z-scoring fitted on training rows. Constant columns are
/// centered but not scaled.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl Standardizer {
    pub fn fit(rows: &[Vec<f64>]) -> Result<Self> {
        let Some(first) = rows.first() else {
            return Err(Error::InvalidInput("cannot standardize zero rows".into()));
        };
        let d = first.len();
        let n = rows.len() as f64;
        let mut mean = vec![0.0; d];
        for r in rows {
            for (m, v) in mean.iter_mut().zip(r) {
                *m += v / n;
            }
        }
        let mut std = vec![0.0; d];
        for r in rows {
            for ((s, v), m) in std.iter_mut().zip(r).zip(&mean) {
                *s += (v - m).powi(2) / n;
            }
        }
        std.iter_mut().for_each(|s| {
            *s = s.sqrt();
            if *s < 1e-12 {
                *s = 1.0;
            }
        });
        Ok(Standardizer { mean, std })
    }

    pub fn apply(&self, row: &[f64]) -> Vec<f64> {
        row.iter()
            .zip(self.mean.iter().zip(&self.std))
            .map(|(v, (m, s))| (v - m) / s)
            .collect()
    }

    pub fn apply_all(&self, rows: &[Vec<f64>]) -> Vec<Vec<f64>> {
        rows.iter().map(|r| self.apply(r)).collect()
    }
}
