use std::collections::HashMap;

use rayon::prelude::*;

use super::corpus::{Corpus, Passage};
use crate::error::{Error, Result};
use crate::textproc::process;

/// One entry of a posting list: passage ordinal and in-passage frequency.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Posting {
    pub doc: u32,
    pub tf: u32,
}

/// Term → postings map with the collection statistics every ranker needs.
///
/// Term ids follow first occurrence in corpus order; posting lists are sorted
/// by passage ordinal.
#[derive(Debug, Clone, PartialEq)]
pub struct InvertedIndex {
    pub(super) ids: Vec<String>,
    pub(super) vocab: HashMap<String, u32>,
    pub(super) terms: Vec<String>,
    pub(super) postings: Vec<Vec<Posting>>,
    pub(super) cf: Vec<u64>,
    pub(super) doc_lengths: Vec<u32>,
    pub(super) total_terms: u64,
    pub(super) avgdl: f64,
}

/// Collection statistics for one term.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TermStats {
    pub df: u64,
    pub cf: u64,
}

impl InvertedIndex {
    /// Indexes `corpus` with the tokenize + stopword pipeline.
    pub fn build(corpus: &Corpus) -> Result<Self> {
        if corpus.is_empty() {
            return Err(Error::EmptyCorpus);
        }
        let mut idx = Partial::default();
        for p in corpus.passages() {
            idx.add(p);
        }
        Ok(idx.finish())
    }

    /// Builds partial indexes over `chunks` corpus slices in parallel and
    /// merges them in order. The result is identical to [`InvertedIndex::build`].
    pub fn build_parallel(corpus: &Corpus, chunks: usize) -> Result<Self> {
        if corpus.is_empty() {
            return Err(Error::EmptyCorpus);
        }
        let chunk_len = corpus.len().div_ceil(chunks.max(1));
        let partials: Vec<Partial> = corpus
            .passages()
            .par_chunks(chunk_len)
            .map(|slice| {
                let mut p = Partial::default();
                slice.iter().for_each(|passage| p.add(passage));
                p
            })
            .collect();
        let mut merged = Partial::default();
        for part in partials {
            merged.merge(part);
        }
        Ok(merged.finish())
    }

    pub fn num_docs(&self) -> usize {
        self.ids.len()
    }

    pub fn avgdl(&self) -> f64 {
        self.avgdl
    }

    pub fn total_terms(&self) -> u64 {
        self.total_terms
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn doc_length(&self, doc: u32) -> u32 {
        self.doc_lengths[doc as usize]
    }

    pub fn doc_lengths(&self) -> &[u32] {
        &self.doc_lengths
    }

    pub fn doc_id(&self, doc: u32) -> &str {
        &self.ids[doc as usize]
    }

    pub fn doc_ordinal(&self, id: &str) -> Option<u32> {
        self.ids.iter().position(|x| x == id).map(|i| i as u32)
    }

    pub fn term_id(&self, term: &str) -> Option<u32> {
        self.vocab.get(term).copied()
    }

    pub fn terms(&self) -> impl Iterator<Item = &str> {
        self.terms.iter().map(String::as_str)
    }

    pub fn postings(&self, term: &str) -> &[Posting] {
        self.term_id(term)
            .map(|t| self.postings[t as usize].as_slice())
            .unwrap_or(&[])
    }

    pub fn term_stats(&self, term: &str) -> TermStats {
        match self.term_id(term) {
            Some(t) => TermStats {
                df: self.postings[t as usize].len() as u64,
                cf: self.cf[t as usize],
            },
            None => TermStats { df: 0, cf: 0 },
        }
    }

    pub fn df(&self, term: &str) -> u64 {
        self.term_stats(term).df
    }

    pub fn cf(&self, term: &str) -> u64 {
        self.term_stats(term).cf
    }

    pub fn tf(&self, term: &str, doc: u32) -> u32 {
        let list = self.postings(term);
        list.binary_search_by_key(&doc, |p| p.doc)
            .map(|i| list[i].tf)
            .unwrap_or(0)
    }

    /// Checks the structural invariants: lengths sum to the token count,
    /// df/cf agree with the posting lists, and avgdl is consistent.
    pub fn validate(&self) -> Result<()> {
        let n = self.ids.len();
        if n == 0 || self.doc_lengths.len() != n {
            return Err(Error::Validation("document table is empty or inconsistent".into()));
        }
        let sum: u64 = self.doc_lengths.iter().map(|&l| l as u64).sum();
        if sum != self.total_terms {
            return Err(Error::Validation(format!(
                "doc lengths sum to {sum}, total_terms is {}",
                self.total_terms
            )));
        }
        if (self.avgdl - self.total_terms as f64 / n as f64).abs() > 1e-9 {
            return Err(Error::Validation("avgdl does not match total_terms / N".into()));
        }
        if self.terms.len() != self.postings.len() || self.terms.len() != self.cf.len() {
            return Err(Error::Validation("term tables have different lengths".into()));
        }
        let mut per_doc = vec![0u64; n];
        for (t, list) in self.postings.iter().enumerate() {
            let cf: u64 = list.iter().map(|p| p.tf as u64).sum();
            if cf != self.cf[t] {
                return Err(Error::Validation(format!("cf mismatch for `{}`", self.terms[t])));
            }
            if list.windows(2).any(|w| w[0].doc >= w[1].doc) || list.iter().any(|p| p.tf == 0) {
                return Err(Error::Validation(format!("malformed postings for `{}`", self.terms[t])));
            }
            for p in list {
                *per_doc
                    .get_mut(p.doc as usize)
                    .ok_or_else(|| Error::Validation("posting refers to unknown passage".into()))? += p.tf as u64;
            }
        }
        if per_doc
            .iter()
            .zip(&self.doc_lengths)
            .any(|(&a, &b)| a != b as u64)
        {
            return Err(Error::Validation("postings disagree with doc lengths".into()));
        }
        Ok(())
    }
}

#[derive(Default)]
struct Partial {
    ids: Vec<String>,
    vocab: HashMap<String, u32>,
    terms: Vec<String>,
    postings: Vec<Vec<Posting>>,
    cf: Vec<u64>,
    doc_lengths: Vec<u32>,
}

impl Partial {
    fn term_slot(&mut self, term: &str) -> usize {
        if let Some(&id) = self.vocab.get(term) {
            return id as usize;
        }
        let id = self.terms.len();
        self.vocab.insert(term.to_owned(), id as u32);
        self.terms.push(term.to_owned());
        self.postings.push(Vec::new());
        self.cf.push(0);
        id
    }

    fn add(&mut self, passage: &Passage) {
        let doc = self.ids.len() as u32;
        let tokens = process(&passage.text);
        // in-passage first-occurrence order keeps term ids deterministic
        let mut local: Vec<(usize, u32)> = Vec::new();
        let mut slot_of: HashMap<usize, usize> = HashMap::new();
        for t in &tokens {
            let id = self.term_slot(t);
            match slot_of.get(&id) {
                Some(&s) => local[s].1 += 1,
                None => {
                    slot_of.insert(id, local.len());
                    local.push((id, 1));
                }
            }
        }
        for (id, tf) in local {
            self.postings[id].push(Posting { doc, tf });
            self.cf[id] += tf as u64;
        }
        self.ids.push(passage.id.clone());
        self.doc_lengths.push(tokens.len() as u32);
    }

    fn merge(&mut self, other: Partial) {
        let offset = self.ids.len() as u32;
        for (local_id, term) in other.terms.iter().enumerate() {
            let id = self.term_slot(term);
            self.cf[id] += other.cf[local_id];
            self.postings[id].extend(other.postings[local_id].iter().map(|p| Posting {
                doc: p.doc + offset,
                tf: p.tf,
            }));
        }
        self.ids.extend(other.ids);
        self.doc_lengths.extend(other.doc_lengths);
    }

    fn finish(self) -> InvertedIndex {
        let total_terms: u64 = self.doc_lengths.iter().map(|&l| l as u64).sum();
        let avgdl = total_terms as f64 / self.ids.len() as f64;
        InvertedIndex {
            ids: self.ids,
            vocab: self.vocab,
            terms: self.terms,
            postings: self.postings,
            cf: self.cf,
            doc_lengths: self.doc_lengths,
            total_terms,
            avgdl,
        }
    }
}
