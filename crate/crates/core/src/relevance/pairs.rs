use std::collections::{BTreeMap, BTreeSet};
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::conversation::{format_turn_list, label_map, parse_turn_list, ConsensusLabel, Topic, TurnKey};
use crate::error::{Error, Result};

/// A (current turn, candidate prior turn) pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidatePair {
    pub topic: u32,
    /// Current turn.
    pub i: u32,
    /// Candidate turn, `j < i`.
    pub j: u32,
    pub u_i: String,
    pub u_j: String,
    pub label: Option<bool>,
}

impl CandidatePair {
    pub fn turn_key(&self) -> TurnKey {
        (self.topic, self.i)
    }

    pub fn target(&self) -> Option<usize> {
        self.label.map(usize::from)
    }
}

/// Every `(i, j)` with `j < i` for each topic, labeled from `gold` where a
/// label exists for turn `i`.
pub fn candidate_pairs(topics: &[Topic], gold: Option<&[ConsensusLabel]>) -> Vec<CandidatePair> {
    let labels = gold.map(label_map).unwrap_or_default();
    let mut out = Vec::new();
    for topic in topics {
        for cur in &topic.turns {
            let gold_set = labels.get(&(topic.number, cur.number)).map(|l| &l.relevant_turns);
            for cand in topic.turns.iter().take_while(|t| t.number < cur.number) {
                out.push(CandidatePair {
                    topic: topic.number,
                    i: cur.number,
                    j: cand.number,
                    u_i: cur.raw_utterance.clone(),
                    u_j: cand.raw_utterance.clone(),
                    label: gold_set.map(|s| s.contains(&cand.number)),
                });
            }
        }
    }
    out
}

/// Predicted relevant prior turns per turn, with optional per-pair scores.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PredictionSet {
    sets: BTreeMap<TurnKey, BTreeSet<u32>>,
    scores: BTreeMap<TurnKey, BTreeMap<u32, f64>>,
}

impl PredictionSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, key: TurnKey, turns: BTreeSet<u32>) -> Result<()> {
        if let Some(&bad) = turns.iter().find(|&&j| j == 0 || j >= key.1) {
            return Err(Error::Validation(format!(
                "prediction for topic {} turn {} includes turn {bad}, which does not precede it",
                key.0, key.1
            )));
        }
        self.sets.insert(key, turns);
        Ok(())
    }

    pub fn set_score(&mut self, key: TurnKey, j: u32, score: f64) {
        self.scores.entry(key).or_default().insert(j, score);
    }

    pub fn get(&self, key: TurnKey) -> Option<&BTreeSet<u32>> {
        self.sets.get(&key)
    }

    pub fn scores(&self, key: TurnKey) -> Option<&BTreeMap<u32, f64>> {
        self.scores.get(&key)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&TurnKey, &BTreeSet<u32>)> {
        self.sets.iter()
    }

    pub fn keys(&self) -> impl Iterator<Item = TurnKey> + '_ {
        self.sets.keys().copied()
    }

    pub fn len(&self) -> usize {
        self.sets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sets.is_empty()
    }

    /// Gold labels viewed as predictions.
    pub fn from_labels(labels: &[ConsensusLabel]) -> Self {
        let mut p = PredictionSet::new();
        for l in labels {
            p.sets.insert(l.key(), l.relevant_turns.clone());
        }
        p
    }

    /// Keeps only the given topics.
    pub fn restrict(&self, topics: &[Topic]) -> PredictionSet {
        let keep: BTreeSet<u32> = topics.iter().map(|t| t.number).collect();
        PredictionSet {
            sets: self
                .sets
                .iter()
                .filter(|(k, _)| keep.contains(&k.0))
                .map(|(k, v)| (*k, v.clone()))
                .collect(),
            scores: self
                .scores
                .iter()
                .filter(|(k, _)| keep.contains(&k.0))
                .map(|(k, v)| (*k, v.clone()))
                .collect(),
        }
    }

    /// CSV with columns `topic,turn,predicted_turns,scores`; scores are
    /// space-separated `turn:p` items.
    pub fn write_csv(&self, writer: impl Write) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["topic", "turn", "predicted_turns", "scores"])?;
        for (k, set) in &self.sets {
            let scores = self
                .scores
                .get(k)
                .map(|m| {
                    m.iter()
                        .map(|(j, p)| format!("{j}:{p}"))
                        .collect::<Vec<_>>()
                        .join(" ")
                })
                .unwrap_or_default();
            w.write_record([k.0.to_string(), k.1.to_string(), format_turn_list(set), scores])?;
        }
        w.flush().map_err(|e| Error::io("<prediction export>", e))?;
        Ok(())
    }

    pub fn read_csv(reader: impl Read, source_name: &str) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().flexible(true).trim(csv::Trim::All).from_reader(reader);
        let mut out = PredictionSet::new();
        for (i, rec) in rdr.records().enumerate() {
            let line = i + 2;
            let rec = rec?;
            let at = |m: String| Error::parse(source_name, line, m);
            let num = |c: usize| -> Result<u32> {
                rec.get(c)
                    .unwrap_or("")
                    .parse()
                    .map_err(|e| at(format!("bad number in column {}: {e}", c + 1)))
            };
            let key = (num(0)?, num(1)?);
            let set = parse_turn_list(rec.get(2).unwrap_or("")).map_err(|e| at(e.to_string()))?;
            out.insert(key, set).map_err(|e| at(e.to_string()))?;
            for item in rec.get(3).unwrap_or("").split_whitespace() {
                let (j, p) = item.split_once(':').ok_or_else(|| at(format!("bad score item `{item}`")))?;
                let j: u32 = j.parse().map_err(|_| at(format!("bad score item `{item}`")))?;
                let p: f64 = p.parse().map_err(|_| at(format!("bad score item `{item}`")))?;
                out.set_score(key, j, p);
            }
        }
        Ok(out)
    }
}

/// A model score `p(R=1)` for one candidate pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairScore {
    pub topic: u32,
    pub i: u32,
    pub j: u32,
    pub p: f64,
}

/// Selects `{j : p ≥ θ}` for each turn of `topics`. Turns without scored
/// candidates get the empty set.
pub fn pairs_to_predictions(topics: &[Topic], scores: &[PairScore], threshold: f64) -> PredictionSet {
    let mut out = PredictionSet::new();
    for t in topics {
        for turn in &t.turns {
            out.sets.insert((t.number, turn.number), BTreeSet::new());
        }
    }
    for s in scores {
        let key = (s.topic, s.i);
        if s.j == 0 || s.j >= s.i {
            continue;
        }
        out.set_score(key, s.j, s.p);
        let set = out.sets.entry(key).or_default();
        if s.p >= threshold {
            set.insert(s.j);
        }
    }
    out
}
