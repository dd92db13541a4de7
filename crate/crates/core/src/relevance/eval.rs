use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::pairs::{pairs_to_predictions, PairScore, PredictionSet};
use crate::conversation::{label_map, ConsensusLabel, Topic, TurnKey};
use crate::error::{Error, Result};

/// Precision, recall and F1 for relevant-turn selection.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Prf {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl Prf {
    pub fn new(precision: f64, recall: f64) -> Self {
        let f1 = if precision + recall > 0.0 {
            2.0 * precision * recall / (precision + recall)
        } else {
            0.0
        };
        Prf { precision, recall, f1 }
    }

    pub fn get(&self, target: Target) -> f64 {
        match target {
            Target::Precision => self.precision,
            Target::Recall => self.recall,
            Target::F1 => self.f1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassificationReport {
    /// Micro-averaged over candidate pairs.
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    /// Mean of per-turn scores, reported alongside for comparison.
    pub macro_avg: Prf,
    pub true_positives: usize,
    pub predicted: usize,
    pub relevant: usize,
    pub turns: usize,
}

impl ClassificationReport {
    pub fn micro(&self) -> Prf {
        Prf {
            precision: self.precision,
            recall: self.recall,
            f1: self.f1,
        }
    }
}

fn ratio(a: usize, b: usize) -> f64 {
    if b == 0 {
        0.0
    } else {
        a as f64 / b as f64
    }
}

/// Scores `pred` against `gold` over `scope` (default: every gold turn).
///
/// Pairs are pooled: `P = Σ|pred ∩ gold| / Σ|pred|`, `R = Σ|pred ∩ gold| /
/// Σ|gold|`. A first turn missing from `pred` counts as an empty
/// prediction; any other missing turn is a coverage error.
///
/// For the per-turn macro average an empty prediction has precision 1 when
/// the gold set is also empty (else 0), and an empty gold set has recall 1
/// when nothing was predicted (else 0).
pub fn classify_eval(pred: &PredictionSet, gold: &[ConsensusLabel], scope: Option<&[TurnKey]>) -> Result<ClassificationReport> {
    let gold_map = label_map(gold);
    let keys: Vec<TurnKey> = match scope {
        Some(s) => s.to_vec(),
        None => gold_map.keys().copied().collect(),
    };
    if keys.is_empty() {
        return Err(Error::Coverage("no turns to evaluate".into()));
    }
    let empty = BTreeSet::new();
    let (mut tp, mut np, mut ng) = (0usize, 0usize, 0usize);
    let (mut mp, mut mr, mut mf) = (0.0, 0.0, 0.0);
    for key in &keys {
        let g = &gold_map
            .get(key)
            .ok_or_else(|| Error::Coverage(format!("no gold label for topic {} turn {}", key.0, key.1)))?
            .relevant_turns;
        let p = match pred.get(*key) {
            Some(p) => p,
            None if key.1 == 1 => &empty,
            None => {
                return Err(Error::Coverage(format!(
                    "no prediction for topic {} turn {}",
                    key.0, key.1
                )))
            }
        };
        let hit = p.intersection(g).count();
        tp += hit;
        np += p.len();
        ng += g.len();
        let tp_prec = if p.is_empty() { f64::from(g.is_empty()) } else { ratio(hit, p.len()) };
        let tp_rec = if g.is_empty() { f64::from(p.is_empty()) } else { ratio(hit, g.len()) };
        let turn = Prf::new(tp_prec, tp_rec);
        mp += turn.precision;
        mr += turn.recall;
        mf += turn.f1;
    }
    let n = keys.len() as f64;
    let micro = Prf::new(ratio(tp, np), ratio(tp, ng));
    Ok(ClassificationReport {
        precision: micro.precision,
        recall: micro.recall,
        f1: micro.f1,
        macro_avg: Prf {
            precision: mp / n,
            recall: mr / n,
            f1: mf / n,
        },
        true_positives: tp,
        predicted: np,
        relevant: ng,
        turns: keys.len(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Target {
    Precision,
    Recall,
    F1,
}

impl fmt::Display for Target {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Target::Precision => "P",
            Target::Recall => "R",
            Target::F1 => "F1",
        })
    }
}

impl FromStr for Target {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "p" | "prec" | "precision" => Ok(Target::Precision),
            "r" | "rec" | "recall" => Ok(Target::Recall),
            "f" | "f1" => Ok(Target::F1),
            _ => Err(Error::InvalidInput(format!("unknown target metric `{s}`"))),
        }
    }
}

/// One model/threshold configuration and its predictions on dev.
#[derive(Debug, Clone, PartialEq)]
pub struct Candidate {
    pub model: String,
    pub threshold: f64,
    pub predictions: PredictionSet,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Selection {
    pub index: usize,
    pub model: String,
    pub threshold: f64,
    pub report: ClassificationReport,
}

/// Candidates for each threshold applied to one model's pair scores.
pub fn threshold_sweep(model: &str, topics: &[Topic], scores: &[PairScore], thresholds: &[f64]) -> Vec<Candidate> {
    thresholds
        .iter()
        .map(|&t| Candidate {
            model: model.to_string(),
            threshold: t,
            predictions: pairs_to_predictions(topics, scores, t),
        })
        .collect()
}

/// The candidate maximizing `target` on `gold`; ties go to the higher
/// threshold, then to the earlier candidate.
pub fn metric_oriented_select(candidates: &[Candidate], gold: &[ConsensusLabel], target: Target) -> Result<Selection> {
    if candidates.is_empty() {
        return Err(Error::InvalidInput("no candidate configurations".into()));
    }
    let mut best: Option<(f64, f64, usize, ClassificationReport)> = None;
    for (k, c) in candidates.iter().enumerate() {
        let report = classify_eval(&c.predictions, gold, None)?;
        let v = report.micro().get(target);
        let better = match &best {
            None => true,
            Some((bv, bt, _, _)) => v > *bv || (v == *bv && c.threshold > *bt),
        };
        if better {
            best = Some((v, c.threshold, k, report));
        }
    }
    let (_, threshold, index, report) = best.expect("non-empty candidates");
    Ok(Selection {
        index,
        model: candidates[index].model.clone(),
        threshold,
        report,
    })
}
