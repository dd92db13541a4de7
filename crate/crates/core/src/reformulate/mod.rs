//! Query construction for a conversation turn: selected context turns'
//! processed tokens, in turn order, followed by the current turn's.

use std::collections::BTreeSet;
use std::fmt;
use std::io::{BufRead, BufReader, Read, Write};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::conversation::{ConsensusLabel, Topic};
use crate::error::{Error, Result};
use crate::relevance::PredictionSet;
use crate::textproc::{process, tokenize, TokenSequence, WordList};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Strategy {
    /// The utterance alone.
    Orig,
    /// First utterance, with pronouns in the current one resolved.
    FU,
    /// Previous utterance.
    PU,
    /// First and previous utterances.
    FPU,
    /// All previous utterances.
    AU,
    /// Utterances predicted relevant.
    PrU,
    /// Utterances labeled relevant.
    Oracle,
}

impl Strategy {
    pub const ALL: [Strategy; 7] = [
        Strategy::Orig,
        Strategy::FU,
        Strategy::PU,
        Strategy::FPU,
        Strategy::AU,
        Strategy::PrU,
        Strategy::Oracle,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Strategy::Orig => "Orig",
            Strategy::FU => "FU",
            Strategy::PU => "PU",
            Strategy::FPU => "FPU",
            Strategy::AU => "AU",
            Strategy::PrU => "PrU",
            Strategy::Oracle => "Oracle",
        }
    }

    pub fn index(self) -> usize {
        Strategy::ALL.iter().position(|s| *s == self).expect("listed")
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Strategy::ALL
            .into_iter()
            .find(|v| v.name().eq_ignore_ascii_case(s.trim()))
            .or_else(|| match s.trim().to_ascii_lowercase().as_str() {
                "original" => Some(Strategy::Orig),
                "gold" => Some(Strategy::Oracle),
                _ => None,
            })
            .ok_or_else(|| Error::InvalidInput(format!("unknown strategy `{s}`")))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Query {
    pub topic: u32,
    pub turn: u32,
    pub tokens: TokenSequence,
    pub strategy: Strategy,
    pub context_turns: Vec<u32>,
}

impl Query {
    /// The text handed to retrieval.
    pub fn text(&self) -> String {
        self.tokens.joined()
    }
}

/// Longest run of consecutive non-stopword tokens; the earliest wins ties.
pub fn head_phrase(text: &str) -> Option<String> {
    let stop = WordList::stoplist();
    let toks = tokenize(text);
    let mut best: Option<(usize, usize)> = None;
    let mut start = 0;
    for (k, t) in toks.iter().enumerate().chain(std::iter::once((toks.len(), &String::new()))) {
        if k == toks.len() || stop.contains(t) {
            if k > start && best.is_none_or(|(s, e)| k - start > e - s) {
                best = Some((start, k));
            }
            start = k + 1;
        }
    }
    best.map(|(s, e)| toks.tokens()[s..e].join(" "))
}

/// Replaces each pronoun in `current` with the head phrase of `context`,
/// keeping surrounding punctuation. Text without pronouns, or a context
/// without content words, comes back unchanged.
pub fn resolve_pronouns(current: &str, context: &str) -> String {
    let Some(head) = head_phrase(context) else {
        return current.to_string();
    };
    let pronouns = WordList::pronouns();
    let mut out = String::with_capacity(current.len());
    let mut rest = current;
    while !rest.is_empty() {
        let ws = rest.len() - rest.trim_start().len();
        out.push_str(&rest[..ws]);
        rest = &rest[ws..];
        let end = rest.find(char::is_whitespace).unwrap_or(rest.len());
        let word = &rest[..end];
        rest = &rest[end..];
        let core_start = word.find(|c: char| c.is_alphanumeric()).unwrap_or(word.len());
        let core_end = word.rfind(|c: char| c.is_alphanumeric()).map_or(core_start, |i| i + 1);
        let core = &word[core_start..core_end.max(core_start)];
        if !core.is_empty() && pronouns.contains(&core.to_lowercase()) {
            out.push_str(&word[..core_start]);
            out.push_str(&head);
            out.push_str(&word[core_end..]);
        } else {
            out.push_str(word);
        }
    }
    out
}

fn context_for(
    topic: &Topic,
    t: u32,
    s: Strategy,
    preds: Option<&PredictionSet>,
    gold: Option<&PredictionSet>,
) -> Result<BTreeSet<u32>> {
    if t <= 1 {
        return Ok(BTreeSet::new());
    }
    let from = |set: Option<&PredictionSet>, what: &str| -> Result<BTreeSet<u32>> {
        let set = set.ok_or_else(|| Error::InvalidInput(format!("strategy {s} needs {what}")))?;
        set.get((topic.number, t)).cloned().ok_or_else(|| {
            Error::Coverage(format!("no {what} for topic {} turn {t}", topic.number))
        })
    };
    Ok(match s {
        Strategy::Orig => BTreeSet::new(),
        Strategy::FU => BTreeSet::from([1]),
        Strategy::PU => BTreeSet::from([t - 1]),
        Strategy::FPU => BTreeSet::from([1, t - 1]),
        Strategy::AU => (1..t).collect(),
        Strategy::PrU => from(preds, "predictions")?,
        Strategy::Oracle => from(gold, "gold labels")?,
    })
}

fn build(topic: &Topic, t: u32, s: Strategy, preds: Option<&PredictionSet>, gold: Option<&PredictionSet>) -> Result<Query> {
    let current = topic
        .utterance(t)
        .ok_or_else(|| Error::InvalidInput(format!("topic {} has no turn {t}", topic.number)))?;
    // check the requirement even on first turns, so misuse fails early
    match s {
        Strategy::PrU if preds.is_none() => return Err(Error::InvalidInput("strategy PrU needs predictions".into())),
        Strategy::Oracle if gold.is_none() => return Err(Error::InvalidInput("strategy Oracle needs gold labels".into())),
        _ => {}
    }
    let context = context_for(topic, t, s, preds, gold)?;
    let mut tokens = TokenSequence::default();
    for &c in &context {
        let u = topic
            .utterance(c)
            .ok_or_else(|| Error::InvalidInput(format!("topic {} has no turn {c}", topic.number)))?;
        tokens.extend(&process(u));
    }
    let current = match (s, topic.utterance(1)) {
        (Strategy::FU, Some(first)) if t > 1 => resolve_pronouns(current, first),
        _ => current.to_string(),
    };
    tokens.extend(&process(&current));
    Ok(Query {
        topic: topic.number,
        turn: t,
        tokens,
        strategy: s,
        context_turns: context.into_iter().collect(),
    })
}

/// The query for turn `t` of `topic` under strategy `s`. `PrU` requires
/// `preds`, `Oracle` requires `gold`.
pub fn reformulate(
    topic: &Topic,
    t: u32,
    s: Strategy,
    preds: Option<&PredictionSet>,
    gold: Option<&[ConsensusLabel]>,
) -> Result<Query> {
    let gold = gold.map(PredictionSet::from_labels);
    build(topic, t, s, preds, gold.as_ref())
}

/// One query per turn, ordered by (topic, turn).
pub fn batch_reformulate(
    topics: &[Topic],
    s: Strategy,
    preds: Option<&PredictionSet>,
    gold: Option<&[ConsensusLabel]>,
) -> Result<Vec<Query>> {
    let gold = gold.map(PredictionSet::from_labels);
    let mut sorted: Vec<&Topic> = topics.iter().collect();
    sorted.sort_by_key(|t| t.number);
    let mut out = Vec::new();
    for topic in sorted {
        for turn in &topic.turns {
            out.push(build(topic, turn.number, s, preds, gold.as_ref())?);
        }
    }
    Ok(out)
}

/// TSV `topic  turn  strategy  tokens`.
pub fn write_queries(queries: &[Query], mut w: impl Write) -> Result<()> {
    for q in queries {
        writeln!(w, "{}\t{}\t{}\t{}", q.topic, q.turn, q.strategy, q.text()).map_err(|e| Error::io("<query export>", e))?;
    }
    Ok(())
}

/// Reads the export format back. Context turns are not part of the export
/// and come back empty.
pub fn read_queries(reader: impl Read, source_name: &str) -> Result<Vec<Query>> {
    let mut out = Vec::new();
    for (i, line) in BufReader::new(reader).lines().enumerate() {
        let line = line.map_err(|e| Error::io(source_name, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let at = |m: String| Error::parse(source_name, i + 1, m);
        let cols: Vec<&str> = line.splitn(4, '\t').collect();
        if cols.len() < 3 {
            return Err(at("expected topic, turn, strategy, tokens".into()));
        }
        out.push(Query {
            topic: cols[0].parse().map_err(|_| at(format!("bad topic `{}`", cols[0])))?,
            turn: cols[1].parse().map_err(|_| at(format!("bad turn `{}`", cols[1])))?,
            strategy: cols[2].parse().map_err(|e: Error| at(e.to_string()))?,
            tokens: TokenSequence::new(cols.get(3).unwrap_or(&"").split_whitespace().map(String::from).collect()),
            context_turns: Vec::new(),
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::conversation::LabelSource;

    fn fig1() -> Topic {
        Topic::new(
            31,
            &[
                "What is throat cancer?",
                "Is it treatable?",
                "Tell me about lung cancer.",
                "What are its symptoms?",
                "Can it spread to the throat?",
                "What causes throat cancer?",
                "What is the first sign of it?",
                "Is it the same as esophageal cancer?",
                "What's the difference in their symptoms?",
            ],
        )
    }

    fn toks(q: &Query) -> Vec<&str> {
        q.tokens.iter().map(String::as_str).collect()
    }

    #[test]
    fn first_turn_is_the_original_everywhere() {
        let t = fig1();
        let preds = PredictionSet::new();
        let gold: Vec<ConsensusLabel> = vec![];
        for s in Strategy::ALL {
            let q = reformulate(&t, 1, s, Some(&preds), Some(&gold)).unwrap();
            assert_eq!(q.tokens, process("What is throat cancer?"));
            assert!(q.context_turns.is_empty());
        }
    }

    #[test]
    fn oracle_orders_context_by_turn() {
        let gold = vec![ConsensusLabel::new(31, 8, [6, 1], LabelSource::Agreement).unwrap()];
        let q = reformulate(&fig1(), 8, Strategy::Oracle, None, Some(&gold)).unwrap();
        assert_eq!(q.context_turns, vec![1, 6]);
        let mut expected = process("What is throat cancer?");
        expected.extend(&process("What causes throat cancer?"));
        expected.extend(&process("Is it the same as esophageal cancer?"));
        assert_eq!(q.tokens, expected);
        assert_eq!(toks(&q), ["throat", "cancer", "causes", "throat", "cancer", "esophageal", "cancer"]);
    }

    #[test]
    fn context_sets() {
        let t = fig1();
        let ctx = |s, n| reformulate(&t, n, s, None, None).unwrap().context_turns;
        assert_eq!(ctx(Strategy::FPU, 2), vec![1]);
        assert_eq!(ctx(Strategy::FPU, 5), vec![1, 4]);
        assert_eq!(ctx(Strategy::PU, 5), vec![4]);
        assert_eq!(ctx(Strategy::AU, 9), (1..9).collect::<Vec<_>>());
        assert!(reformulate(&t, 3, Strategy::PrU, None, None).is_err());
        assert!(reformulate(&t, 3, Strategy::Oracle, None, None).is_err());
    }

    #[test]
    fn pronoun_substitution() {
        assert_eq!(head_phrase("What is throat cancer?").as_deref(), Some("throat cancer"));
        assert_eq!(
            resolve_pronouns("What are its symptoms?", "What is throat cancer?"),
            "What are throat cancer symptoms?"
        );
        assert_eq!(resolve_pronouns("Any cure?", "What is throat cancer?"), "Any cure?");
        assert_eq!(resolve_pronouns("Is it bad?", "what is it"), "Is it bad?");
        let q = reformulate(&fig1(), 4, Strategy::FU, None, None).unwrap();
        assert_eq!(toks(&q), ["throat", "cancer", "throat", "cancer", "symptoms"]);
    }

    #[test]
    fn pru_with_gold_predictions_matches_oracle() {
        let gold = vec![
            ConsensusLabel::new(31, 4, [3], LabelSource::Agreement).unwrap(),
            ConsensusLabel::new(31, 8, [1, 6], LabelSource::Agreement).unwrap(),
        ];
        let t = fig1();
        let preds = PredictionSet::from_labels(&gold);
        for n in [4, 8] {
            let a = reformulate(&t, n, Strategy::PrU, Some(&preds), None).unwrap();
            let b = reformulate(&t, n, Strategy::Oracle, None, Some(&gold)).unwrap();
            assert_eq!(a.text(), b.text());
        }
    }

    #[test]
    fn export_round_trip() {
        let qs = batch_reformulate(&[fig1()], Strategy::AU, None, None).unwrap();
        assert_eq!(qs.len(), 9);
        let mut buf = Vec::new();
        write_queries(&qs, &mut buf).unwrap();
        let back = read_queries(buf.as_slice(), "q").unwrap();
        for (a, b) in qs.iter().zip(&back) {
            assert_eq!((a.topic, a.turn, a.strategy, &a.tokens), (b.topic, b.turn, b.strategy, &b.tokens));
        }
    }
}
