use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::tokenize::{tokenize, WordList};
use crate::error::{Error, Result};

/// Leading-trigram frequencies over a set of utterances.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrigramStats {
    /// `(trigram, share)` ranked by count descending, ties lexicographic.
    pub top: Vec<(String, f64)>,
    /// Utterances with fewer than three tokens.
    pub skipped: usize,
    /// Utterances that contributed a trigram.
    pub counted: usize,
}

fn normalize_auxiliary(token: &str) -> &str {
    match token {
        "is" => "are",
        "was" => "were",
        "does" | "did" => "do",
        other => other,
    }
}

/// Ranks the first three tokens of each utterance by frequency, after
/// mapping singular/past auxiliaries onto a common form. Shares are relative
/// to the number of utterances long enough to contribute.
pub fn top_trigrams<S: AsRef<str>>(utterances: &[S], n: usize) -> Result<TrigramStats> {
    if n == 0 {
        return Err(Error::InvalidInput("trigram count must be at least 1".into()));
    }
    let mut counts: HashMap<String, usize> = HashMap::new();
    let mut skipped = 0;
    let mut counted = 0;
    for u in utterances {
        let tokens = tokenize(u.as_ref());
        if tokens.len() < 3 {
            skipped += 1;
            continue;
        }
        counted += 1;
        let trigram = tokens.tokens()[..3]
            .iter()
            .map(|t| normalize_auxiliary(t))
            .collect::<Vec<_>>()
            .join(" ");
        *counts.entry(trigram).or_default() += 1;
    }
    let mut ranked: Vec<(String, usize)> = counts.into_iter().collect();
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    let top = ranked
        .into_iter()
        .take(n)
        .map(|(g, c)| (g, c as f64 / counted as f64))
        .collect();
    Ok(TrigramStats { top, skipped, counted })
}

/// Pronoun usage across utterances.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PronounStats {
    /// Fraction of utterances containing at least one pronoun.
    pub share_with_pronoun: f64,
    /// Among those, fraction whose first pronoun is the third token.
    pub share_third_position: f64,
}

pub fn pronoun_stats<S: AsRef<str>>(utterances: &[S]) -> PronounStats {
    pronoun_stats_with(utterances, WordList::pronouns())
}

pub fn pronoun_stats_with<S: AsRef<str>>(utterances: &[S], pronouns: &WordList) -> PronounStats {
    let mut with_pronoun = 0usize;
    let mut third = 0usize;
    for u in utterances {
        let tokens = tokenize(u.as_ref());
        if let Some(pos) = tokens.iter().position(|t| pronouns.contains(t)) {
            with_pronoun += 1;
            if pos == 2 {
                third += 1;
            }
        }
    }
    let ratio = |a: usize, b: usize| if b == 0 { 0.0 } else { a as f64 / b as f64 };
    PronounStats {
        share_with_pronoun: ratio(with_pronoun, utterances.len()),
        share_third_position: ratio(third, with_pronoun),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn trigram_counts_after_normalization() {
        let stats = top_trigrams(&["what is a", "what is a", "how do i"], 2).unwrap();
        assert_eq!(stats.top.len(), 2);
        assert_eq!(stats.top[0].0, "what are a");
        assert!((stats.top[0].1 - 2.0 / 3.0).abs() < 1e-12);
        assert_eq!(stats.top[1].0, "how do i");
        assert!((stats.top[1].1 - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn trigram_edges() {
        let empty: [&str; 0] = [];
        assert!(top_trigrams(&empty, 5).unwrap().top.is_empty());
        let stats = top_trigrams(&["what is it", "why"], 100).unwrap();
        assert_eq!(stats.top.len(), 1);
        assert_eq!(stats.skipped, 1);
        assert!(top_trigrams(&["a b c"], 0).is_err());
    }

    #[test]
    fn pronoun_examples() {
        let s = pronoun_stats(&["tell me about it"]);
        assert_eq!((s.share_with_pronoun, s.share_third_position), (1.0, 0.0));
        let s = pronoun_stats(&["lung cancer treatment"]);
        assert_eq!((s.share_with_pronoun, s.share_third_position), (0.0, 0.0));
        let s = pronoun_stats(&["what are its symptoms", "lung cancer"]);
        assert_eq!((s.share_with_pronoun, s.share_third_position), (0.5, 1.0));
    }

    proptest! {
        #[test]
        fn shares_sum_to_one(us in proptest::collection::vec("(what|how|is|was|the|a|it) (is|does|do|a) (it|its|this|goat|cancer)( x)?", 1..30)) {
            let stats = top_trigrams(&us, usize::MAX).unwrap();
            let total: f64 = stats.top.iter().map(|(_, s)| s).sum();
            prop_assert!((total - 1.0).abs() < 1e-9);
        }
    }
}
