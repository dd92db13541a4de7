//! Passage ingestion, inverted indexing and term-matching retrieval.

mod corpus;
mod index;
pub mod persist;
mod scoring;
mod search;

pub use corpus::{ingest, Corpus, CorpusFormat, Passage};
pub use index::{InvertedIndex, Posting, TermStats};
pub use persist::{load, persist};
pub use scoring::{
    score_bm25, score_dfr, score_ql, Bm25Params, DfrParams, Model, PreparedQuery, QlParams, ScoringParams,
};
pub use search::{retrieve, RankedList, Retrieval, RetrieveOptions};
