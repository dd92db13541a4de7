use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::labels::{check_prior, ConsensusLabel, LabelSource, TurnKey};
use crate::error::{Error, Result};

/// One annotator's selection of relevant prior turns for one turn. An empty
/// selection marks the turn as self-contained.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnnotationRecord {
    pub topic: u32,
    pub turn: u32,
    pub relevant_turns: BTreeSet<u32>,
    pub annotator: String,
    #[serde(default)]
    pub timestamp: u64,
}

impl AnnotationRecord {
    pub fn new(topic: u32, turn: u32, relevant_turns: impl IntoIterator<Item = u32>, annotator: impl Into<String>) -> Self {
        AnnotationRecord {
            topic,
            turn,
            relevant_turns: relevant_turns.into_iter().collect(),
            annotator: annotator.into(),
            timestamp: 0,
        }
    }

    pub fn key(&self) -> TurnKey {
        (self.topic, self.turn)
    }

    pub fn validate(&self) -> Result<()> {
        if self.annotator.trim().is_empty() {
            return Err(Error::Validation("annotator id is empty".into()));
        }
        check_prior(self.topic, self.turn, &self.relevant_turns)
    }
}

/// Outcome of comparing annotators' selections for one turn.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Agreement {
    /// Size of the largest group with identical selections over the number
    /// of annotators.
    pub percentage: f64,
    pub agreeing: usize,
    pub annotators: usize,
    /// The agreed selection, present when at least two thirds agree.
    pub consensus: Option<BTreeSet<u32>>,
}

impl Agreement {
    pub fn reached(&self) -> bool {
        self.consensus.is_some()
    }
}

/// Exact-set agreement among annotators of a single turn. Consensus requires
/// at least two thirds of annotators to have chosen the identical set.
pub fn agreement(records: &[AnnotationRecord]) -> Result<Agreement> {
    let Some(first) = records.first() else {
        return Err(Error::InvalidInput("agreement needs at least two annotators".into()));
    };
    if records.iter().any(|r| r.key() != first.key()) {
        return Err(Error::InvalidInput("records span more than one turn".into()));
    }
    // later submissions by the same annotator replace earlier ones
    let latest: BTreeMap<&str, &BTreeSet<u32>> = records
        .iter()
        .map(|r| (r.annotator.as_str(), &r.relevant_turns))
        .collect();
    let k = latest.len();
    if k < 2 {
        return Err(Error::InvalidInput("agreement needs at least two annotators".into()));
    }
    let mut groups: BTreeMap<&BTreeSet<u32>, usize> = BTreeMap::new();
    for set in latest.values() {
        *groups.entry(set).or_default() += 1;
    }
    let (best, m) = groups
        .into_iter()
        .max_by(|a, b| a.1.cmp(&b.1).then_with(|| b.0.cmp(a.0)))
        .expect("at least two annotators");
    let reached = 3 * m >= 2 * k;
    Ok(Agreement {
        percentage: m as f64 / k as f64,
        agreeing: m,
        annotators: k,
        consensus: reached.then(|| best.clone()),
    })
}

/// Annotation state: every annotator's latest selection per turn plus
/// adjudicated labels.
#[derive(Debug, Clone, PartialEq)]
pub struct AnnotationBook {
    expected_annotators: usize,
    records: BTreeMap<TurnKey, BTreeMap<String, AnnotationRecord>>,
    adjudications: BTreeMap<TurnKey, (ConsensusLabel, String)>,
}

impl Default for AnnotationBook {
    fn default() -> Self {
        AnnotationBook::new(3)
    }
}

impl AnnotationBook {
    pub fn new(expected_annotators: usize) -> Self {
        AnnotationBook {
            expected_annotators: expected_annotators.max(2),
            records: BTreeMap::new(),
            adjudications: BTreeMap::new(),
        }
    }

    pub fn expected_annotators(&self) -> usize {
        self.expected_annotators
    }

    pub fn record(&mut self, rec: AnnotationRecord) -> Result<()> {
        rec.validate()?;
        self.records
            .entry(rec.key())
            .or_default()
            .insert(rec.annotator.clone(), rec);
        Ok(())
    }

    pub fn records_for(&self, key: TurnKey) -> Vec<AnnotationRecord> {
        self.records
            .get(&key)
            .map(|m| m.values().cloned().collect())
            .unwrap_or_default()
    }

    pub fn has_annotated(&self, annotator: &str, key: TurnKey) -> bool {
        self.records
            .get(&key)
            .is_some_and(|m| m.contains_key(annotator))
    }

    pub fn annotated_count(&self, annotator: &str) -> usize {
        self.records.values().filter(|m| m.contains_key(annotator)).count()
    }

    pub fn agreement(&self, key: TurnKey) -> Result<Agreement> {
        agreement(&self.records_for(key))
    }

    /// All expected annotators have submitted and fewer than two thirds agree.
    pub fn is_flagged(&self, key: TurnKey) -> bool {
        let Some(m) = self.records.get(&key) else {
            return false;
        };
        m.len() >= self.expected_annotators && self.agreement(key).is_ok_and(|a| !a.reached())
    }

    /// Flagged turns still awaiting adjudication.
    pub fn flagged(&self) -> Vec<TurnKey> {
        self.records
            .keys()
            .copied()
            .filter(|k| self.is_flagged(*k) && !self.adjudications.contains_key(k))
            .collect()
    }

    /// Records a deliberated final label for a flagged turn. Re-adjudicating
    /// replaces the previous decision.
    pub fn adjudicate(
        &mut self,
        topic: u32,
        turn: u32,
        final_turns: BTreeSet<u32>,
        adjudicator: impl Into<String>,
    ) -> Result<ConsensusLabel> {
        if !self.is_flagged((topic, turn)) {
            return Err(Error::NotFlagged { topic, turn });
        }
        let label = ConsensusLabel::new(topic, turn, final_turns, LabelSource::Adjudication)?;
        self.adjudications
            .insert((topic, turn), (label.clone(), adjudicator.into()));
        Ok(label)
    }

    pub fn adjudicator(&self, key: TurnKey) -> Option<&str> {
        self.adjudications.get(&key).map(|(_, a)| a.as_str())
    }

    /// One label per turn that is settled, by agreement or adjudication.
    pub fn consensus_labels(&self) -> Vec<ConsensusLabel> {
        let mut out = Vec::new();
        for (&(topic, turn), _) in &self.records {
            if let Some((label, _)) = self.adjudications.get(&(topic, turn)) {
                out.push(label.clone());
            } else if let Ok(Agreement {
                consensus: Some(set), ..
            }) = self.agreement((topic, turn))
            {
                out.push(ConsensusLabel {
                    topic,
                    turn,
                    relevant_turns: set,
                    source: LabelSource::Agreement,
                });
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn recs(sets: &[&[u32]]) -> Vec<AnnotationRecord> {
        sets.iter()
            .enumerate()
            .map(|(i, s)| AnnotationRecord::new(31, 8, s.iter().copied(), format!("a{i}")))
            .collect()
    }

    #[test]
    fn two_of_three() {
        let a = agreement(&recs(&[&[1], &[1], &[1, 6]])).unwrap();
        assert!((a.percentage - 2.0 / 3.0).abs() < 1e-12);
        assert_eq!(a.consensus, Some(BTreeSet::from([1])));
    }

    #[test]
    fn full_disagreement_and_unanimity() {
        let a = agreement(&recs(&[&[1], &[6], &[2]])).unwrap();
        assert!((a.percentage - 1.0 / 3.0).abs() < 1e-12);
        assert!(a.consensus.is_none());
        let a = agreement(&recs(&[&[1], &[1], &[1]])).unwrap();
        assert_eq!(a.percentage, 1.0);
        assert_eq!(a.consensus, Some(BTreeSet::from([1])));
    }

    #[test]
    fn too_few_annotators() {
        assert!(agreement(&recs(&[&[1]])).is_err());
        assert!(agreement(&[]).is_err());
    }

    #[test]
    fn adjudication_flow() {
        let mut book = AnnotationBook::default();
        for r in recs(&[&[1], &[6], &[2]]) {
            book.record(r).unwrap();
        }
        for r in recs(&[&[1], &[1], &[1, 6]]) {
            book.record(AnnotationRecord { turn: 7, ..r }).unwrap();
        }
        assert_eq!(book.flagged(), vec![(31, 8)]);
        assert!(matches!(book.adjudicate(31, 7, BTreeSet::from([1]), "lead"), Err(Error::NotFlagged { .. })));
        book.adjudicate(31, 8, BTreeSet::from([1, 6]), "lead").unwrap();
        assert!(book.flagged().is_empty());
        let labels = book.consensus_labels();
        assert_eq!(labels.len(), 2);
        let l8 = labels.iter().find(|l| l.turn == 8).unwrap();
        assert_eq!(l8.source, LabelSource::Adjudication);
        assert_eq!(l8.relevant_turns, BTreeSet::from([1, 6]));
    }

    #[test]
    fn not_flagged_until_all_submitted() {
        let mut book = AnnotationBook::default();
        for r in recs(&[&[1], &[6]]) {
            book.record(r).unwrap();
        }
        assert!(book.flagged().is_empty());
        assert!(book.record(AnnotationRecord::new(31, 5, [7], "a0")).is_err());
    }

    proptest! {
        #[test]
        fn percentage_is_a_fraction_of_annotators(sets in proptest::collection::vec(proptest::collection::btree_set(1u32..4, 0..3), 2..7)) {
            let records: Vec<_> = sets.iter().enumerate()
                .map(|(i, s)| AnnotationRecord::new(1, 5, s.iter().copied(), format!("a{i}")))
                .collect();
            let a = agreement(&records).unwrap();
            let k = sets.len();
            prop_assert_eq!(a.annotators, k);
            prop_assert!((a.percentage * k as f64 - a.agreeing as f64).abs() < 1e-9);
            prop_assert!(a.agreeing >= 1 && a.agreeing <= k);
            prop_assert_eq!(a.consensus.is_some(), a.percentage >= 2.0 / 3.0 - 1e-12);
        }
    }
}
