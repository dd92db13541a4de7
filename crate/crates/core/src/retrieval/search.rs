use std::cmp::Ordering;
use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::index::InvertedIndex;
use super::scoring::{Model, PreparedQuery, ScoringParams};
use crate::error::{Error, Result};
use crate::textproc::{remove_stopwords, TokenSequence};

/// Passages ordered by descending score; equal scores ordered by id.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RankedList {
    entries: Vec<(String, f64)>,
}

fn rank_order(a: &(String, f64), b: &(String, f64)) -> Ordering {
    b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0))
}

impl RankedList {
    /// Sorts `entries` into rank order. Duplicate ids are rejected.
    pub fn from_scores(mut entries: Vec<(String, f64)>) -> Result<Self> {
        entries.sort_by(rank_order);
        let ids: BTreeSet<&str> = entries.iter().map(|(id, _)| id.as_str()).collect();
        if ids.len() != entries.len() {
            return Err(Error::InvalidInput("ranked list contains duplicate passage ids".into()));
        }
        Ok(RankedList { entries })
    }

    /// Accepts entries already in rank order, checking scores never increase.
    pub fn from_ranked(entries: Vec<(String, f64)>) -> Result<Self> {
        if entries.windows(2).any(|w| w[1].1 > w[0].1) {
            return Err(Error::InvalidInput("ranked list scores increase".into()));
        }
        let ids: BTreeSet<&str> = entries.iter().map(|(id, _)| id.as_str()).collect();
        if ids.len() != entries.len() {
            return Err(Error::InvalidInput("ranked list contains duplicate passage ids".into()));
        }
        Ok(RankedList { entries })
    }

    pub fn entries(&self) -> &[(String, f64)] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.entries.iter().map(|(id, _)| id.as_str())
    }

    pub fn truncate(&mut self, k: usize) {
        self.entries.truncate(k);
    }
}

/// Retrieval output plus the diagnostics callers may want to surface.
#[derive(Debug, Clone, PartialEq)]
pub struct Retrieval {
    pub ranked: RankedList,
    /// The query had no indexable terms left after stopping.
    pub empty_query: bool,
    /// Query terms unknown to the collection.
    pub oov: Vec<String>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct RetrieveOptions {
    pub params: ScoringParams,
    /// Score every passage under QL instead of only those matching a term.
    /// Candidate-only QL is an approximation: passages without any query
    /// term still receive background mass and may outrank weak matches.
    pub exhaustive_ql: bool,
}

/// Top-`k` passages for `q` under `model`.
pub fn retrieve(q: &TokenSequence, model: Model, k: usize, idx: &InvertedIndex, opts: &RetrieveOptions) -> Result<Retrieval> {
    if k == 0 {
        return Err(Error::InvalidInput("k must be at least 1".into()));
    }
    let q = remove_stopwords(q);
    let prepared = PreparedQuery::new(&q, idx);
    if prepared.is_empty() {
        if !q.is_empty() {
            log::warn!("query `{q}` has no terms in the collection");
        }
        return Ok(Retrieval {
            ranked: RankedList::default(),
            empty_query: true,
            oov: prepared.oov,
        });
    }
    if model == Model::Ql && !prepared.oov.is_empty() {
        log::debug!("dropping out-of-vocabulary query terms {:?}", prepared.oov);
    }

    let candidates: Vec<u32> = if model == Model::Ql && opts.exhaustive_ql {
        (0..idx.num_docs() as u32).collect()
    } else {
        let set: BTreeSet<u32> = prepared
            .terms
            .iter()
            .flat_map(|(t, _)| idx.postings(t).iter().map(|p| p.doc))
            .collect();
        set.into_iter().collect()
    };

    let mut scored: Vec<(String, f64)> = candidates
        .into_iter()
        .map(|d| (idx.doc_id(d).to_owned(), opts.params.score(model, &prepared, d, idx)))
        .collect();
    if scored.len() > k {
        scored.select_nth_unstable_by(k - 1, rank_order);
        scored.truncate(k);
    }
    scored.sort_by(rank_order);
    Ok(Retrieval {
        ranked: RankedList { entries: scored },
        empty_query: false,
        oov: prepared.oov,
    })
}
