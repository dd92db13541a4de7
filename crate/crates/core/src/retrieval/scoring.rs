//! Term-matching scorers: Okapi BM25, Dirichlet-smoothed query likelihood and
//! the InL2 divergence-from-randomness model.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::index::InvertedIndex;
use crate::error::{Error, Result};
use crate::textproc::TokenSequence;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Model {
    Bm25,
    Ql,
    Dfr,
}

impl Model {
    pub const ALL: [Model; 3] = [Model::Dfr, Model::Bm25, Model::Ql];

    pub fn name(self) -> &'static str {
        match self {
            Model::Bm25 => "bm25",
            Model::Ql => "ql",
            Model::Dfr => "dfr",
        }
    }
}

impl fmt::Display for Model {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Model {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "bm25" => Ok(Model::Bm25),
            "ql" => Ok(Model::Ql),
            "dfr" | "inl2" => Ok(Model::Dfr),
            other => Err(Error::InvalidInput(format!("unknown scorer `{other}` (expected bm25, ql or dfr)"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Bm25Params {
    pub k1: f64,
    pub b: f64,
}

impl Default for Bm25Params {
    fn default() -> Self {
        Bm25Params { k1: 1.2, b: 0.75 }
    }
}

impl Bm25Params {
    /// `ln(1 + (N - df + 0.5) / (df + 0.5))`, non-negative for `df <= N`.
    pub fn idf(n: f64, df: f64) -> f64 {
        (1.0 + (n - df + 0.5) / (df + 0.5)).ln()
    }

    pub fn term_score(&self, tf: f64, df: f64, n: f64, dl: f64, avgdl: f64) -> f64 {
        if tf == 0.0 {
            return 0.0;
        }
        let norm = self.k1 * (1.0 - self.b + self.b * dl / avgdl);
        Self::idf(n, df) * tf * (self.k1 + 1.0) / (tf + norm)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct QlParams {
    pub mu: f64,
}

impl Default for QlParams {
    fn default() -> Self {
        QlParams { mu: 1500.0 }
    }
}

impl QlParams {
    /// `ln((tf + mu * cf / |C|) / (|d| + mu))`.
    pub fn term_score(&self, tf: f64, cf: f64, total_terms: f64, dl: f64) -> f64 {
        ((tf + self.mu * cf / total_terms) / (dl + self.mu)).ln()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DfrParams {
    pub c: f64,
}

impl Default for DfrParams {
    fn default() -> Self {
        DfrParams { c: 1.0 }
    }
}

impl DfrParams {
    /// InL2: `tfn/(tfn+1) · log2((N+1)/(df+0.5))` with
    /// `tfn = tf · log2(1 + c · avgdl / |d|)`.
    pub fn term_score(&self, tf: f64, df: f64, n: f64, dl: f64, avgdl: f64) -> f64 {
        if tf == 0.0 {
            return 0.0;
        }
        let tfn = tf * (1.0 + self.c * avgdl / dl).log2();
        tfn / (tfn + 1.0) * ((n + 1.0) / (df + 0.5)).log2()
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct ScoringParams {
    #[serde(default)]
    pub bm25: Bm25Params,
    #[serde(default)]
    pub ql: QlParams,
    #[serde(default)]
    pub dfr: DfrParams,
}

/// A query reduced to its distinct in-vocabulary terms with counts, sorted
/// lexicographically so every scorer is invariant to token order.
#[derive(Debug, Clone, PartialEq)]
pub struct PreparedQuery {
    pub terms: Vec<(String, u32)>,
    /// Terms absent from the collection. They add nothing to BM25/DFR and
    /// are dropped from QL scoring.
    pub oov: Vec<String>,
}

impl PreparedQuery {
    pub fn new(q: &TokenSequence, idx: &InvertedIndex) -> Self {
        let mut counts: BTreeMap<&str, u32> = BTreeMap::new();
        for t in q {
            *counts.entry(t.as_str()).or_default() += 1;
        }
        let mut terms = Vec::new();
        let mut oov = Vec::new();
        for (t, c) in counts {
            if idx.cf(t) > 0 {
                terms.push((t.to_owned(), c));
            } else {
                oov.push(t.to_owned());
            }
        }
        PreparedQuery { terms, oov }
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }
}

impl ScoringParams {
    pub fn score(&self, model: Model, q: &PreparedQuery, doc: u32, idx: &InvertedIndex) -> f64 {
        let n = idx.num_docs() as f64;
        let avgdl = idx.avgdl();
        let dl = idx.doc_length(doc) as f64;
        let total = idx.total_terms() as f64;
        q.terms
            .iter()
            .map(|(term, qtf)| {
                let stats = idx.term_stats(term);
                let tf = idx.tf(term, doc) as f64;
                let per = match model {
                    Model::Bm25 => self.bm25.term_score(tf, stats.df as f64, n, dl, avgdl),
                    Model::Ql => self.ql.term_score(tf, stats.cf as f64, total, dl),
                    Model::Dfr => self.dfr.term_score(tf, stats.df as f64, n, dl, avgdl),
                };
                *qtf as f64 * per
            })
            .sum()
    }
}

pub fn score_bm25(q: &TokenSequence, doc: u32, idx: &InvertedIndex, params: &Bm25Params) -> f64 {
    let p = ScoringParams {
        bm25: *params,
        ..Default::default()
    };
    p.score(Model::Bm25, &PreparedQuery::new(q, idx), doc, idx)
}

pub fn score_ql(q: &TokenSequence, doc: u32, idx: &InvertedIndex, params: &QlParams) -> f64 {
    let p = ScoringParams {
        ql: *params,
        ..Default::default()
    };
    p.score(Model::Ql, &PreparedQuery::new(q, idx), doc, idx)
}

pub fn score_dfr(q: &TokenSequence, doc: u32, idx: &InvertedIndex, params: &DfrParams) -> f64 {
    let p = ScoringParams {
        dfr: *params,
        ..Default::default()
    };
    p.score(Model::Dfr, &PreparedQuery::new(q, idx), doc, idx)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::retrieval::{Corpus, Passage};

    #[test]
    fn bm25_hand_value() {
        // N=2, df=1, tf=1, |d| = avgdl
        let s = Bm25Params::default().term_score(1.0, 1.0, 2.0, 3.0, 3.0);
        assert!((s - std::f64::consts::LN_2).abs() < 1e-12);
        assert!((s - 0.6931).abs() < 1e-4);
    }

    #[test]
    fn ql_hand_value() {
        let s = QlParams { mu: 10.0 }.term_score(1.0, 2.0, 10.0, 5.0);
        assert!((s - (3.0f64 / 15.0).ln()).abs() < 1e-12);
        assert!((s - -1.6094).abs() < 1e-4);
        // tf = 0 still contributes the background term
        let bg = QlParams { mu: 10.0 }.term_score(0.0, 2.0, 10.0, 5.0);
        assert!((bg - (2.0f64 / 15.0).ln()).abs() < 1e-12);
    }

    #[test]
    fn dfr_hand_value() {
        let s = DfrParams::default().term_score(1.0, 1.0, 1.0, 4.0, 4.0);
        assert!((s - 0.5 * (2.0f64 / 1.5).log2()).abs() < 1e-12);
        assert!((s - 0.2075).abs() < 1e-4);
        assert_eq!(DfrParams::default().term_score(0.0, 1.0, 1.0, 4.0, 4.0), 0.0);
    }

    #[test]
    fn monotonicity() {
        let bm = Bm25Params::default();
        assert!(bm.term_score(2.0, 1.0, 10.0, 5.0, 5.0) > bm.term_score(1.0, 1.0, 10.0, 5.0, 5.0));
        let dfr = DfrParams::default();
        assert!(dfr.term_score(1.0, 3.0, 10.0, 5.0, 5.0) < dfr.term_score(1.0, 2.0, 10.0, 5.0, 5.0));
        let ql = QlParams::default();
        assert!(ql.term_score(3.0, 4.0, 100.0, 5.0) > ql.term_score(1.0, 4.0, 100.0, 5.0));
        for df in 0..=10 {
            assert!(Bm25Params::idf(10.0, df as f64) >= 0.0);
        }
    }

    #[test]
    fn index_level_scores() {
        let c = Corpus::new(vec![Passage::new("a", "lung cancer"), Passage::new("b", "goat cheese")]).unwrap();
        let idx = InvertedIndex::build(&c).unwrap();
        let q = TokenSequence::from(vec!["lung"]);
        assert!((score_bm25(&q, 0, &idx, &Bm25Params::default()) - std::f64::consts::LN_2).abs() < 1e-12);
        assert_eq!(score_bm25(&q, 1, &idx, &Bm25Params::default()), 0.0);
        assert_eq!(score_dfr(&q, 1, &idx, &DfrParams::default()), 0.0);
        let oov = TokenSequence::from(vec!["zebra"]);
        assert_eq!(score_ql(&oov, 0, &idx, &QlParams::default()), 0.0);
        let rev = TokenSequence::from(vec!["cancer", "lung", "lung"]);
        let fwd = TokenSequence::from(vec!["lung", "cancer", "lung"]);
        for m in Model::ALL {
            let p = ScoringParams::default();
            assert_eq!(
                p.score(m, &PreparedQuery::new(&rev, &idx), 0, &idx),
                p.score(m, &PreparedQuery::new(&fwd, &idx), 0, &idx)
            );
        }
    }
}
