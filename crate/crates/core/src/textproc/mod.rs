//! Text processing shared by every other module: tokenization, stopping,
//! question categorization, utterance statistics, TF-IDF vectors and
//! averaged word embeddings.

mod category;
mod embedding;
mod stats;
mod tokenize;
mod vector;

pub use category::{categorize, QuestionCategory};
pub use embedding::{awe, awe_tokens, load_embeddings, Awe, EmbeddingTable};
pub use stats::{pronoun_stats, pronoun_stats_with, top_trigrams, PronounStats, TrigramStats};
pub use tokenize::{process, remove_stopwords, tokenize, TokenSequence, WordList};
pub use vector::{cosine, tfidf, tfidf_tokens, Cosine, DocFreqStats, TermVector};
