use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::features::Dataset;
use super::Classifier;
use crate::error::{Error, Result};

/// Majority vote among the `k` training rows nearest in Euclidean distance.
/// Equal distances are ordered by training index. A split vote takes the
/// label of the single nearest neighbor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Knn {
    k: usize,
    train: Dataset,
}

impl Knn {
    pub fn fit(train: Dataset, k: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidInput("k must be at least 1".into()));
        }
        if k > train.len() {
            return Err(Error::InvalidInput(format!(
                "k = {k} exceeds the {} training pairs",
                train.len()
            )));
        }
        Ok(Knn { k, train })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// Indices of the `k` nearest training rows, nearest first.
    pub fn neighbors(&self, x: &[f64]) -> Vec<usize> {
        let mut d: Vec<(f64, usize)> = self
            .train
            .x
            .iter()
            .enumerate()
            .map(|(i, r)| (sq_dist(r, x), i))
            .collect();
        let cmp = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
        if self.k < d.len() {
            d.select_nth_unstable_by(self.k - 1, cmp);
            d.truncate(self.k);
        }
        d.sort_by(cmp);
        d.into_iter().map(|(_, i)| i).collect()
    }

    fn vote(&self, x: &[f64]) -> (f64, bool) {
        let nn = self.neighbors(x);
        let pos = nn.iter().filter(|&&i| self.train.y[i] == 1).count();
        let frac = pos as f64 / nn.len() as f64;
        let label = match (2 * pos).cmp(&nn.len()) {
            std::cmp::Ordering::Greater => true,
            std::cmp::Ordering::Less => false,
            std::cmp::Ordering::Equal => self.train.y[nn[0]] == 1,
        };
        (frac, label)
    }
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

impl Classifier for Knn {
    /// Share of positive neighbors.
    fn score(&self, x: &[f64]) -> f64 {
        self.vote(x).0
    }

    fn predict(&self, x: &[f64]) -> bool {
        self.vote(x).1
    }
}

/// Chooses `k` among `candidates` by `folds`-fold cross-validation on
/// `data`, maximizing pair-level F1. Ties favor the smaller `k`.
pub fn select_k(data: &Dataset, candidates: &[usize], folds: usize, seed: u64) -> Result<usize> {
    if candidates.is_empty() {
        return Err(Error::InvalidInput("no candidate k values".into()));
    }
    if folds < 2 || folds > data.len() {
        return Err(Error::InvalidInput(format!(
            "cannot run {folds}-fold cross-validation on {} pairs",
            data.len()
        )));
    }
    let mut order: Vec<usize> = (0..data.len()).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let fold_of = |pos: usize| pos * folds / order.len();
    let mut best: Option<(f64, usize)> = None;
    let mut ks = candidates.to_vec();
    ks.sort_unstable();
    ks.dedup();
    for k in ks {
        let (mut tp, mut fp, mut fneg) = (0usize, 0usize, 0usize);
        let mut feasible = true;
        for f in 0..folds {
            let (test, train): (Vec<(usize, usize)>, Vec<(usize, usize)>) =
                order.iter().copied().enumerate().partition(|(pos, _)| fold_of(*pos) == f);
            let train_idx: Vec<usize> = train.into_iter().map(|(_, i)| i).collect();
            let Ok(model) = Knn::fit(data.subset(&train_idx), k) else {
                feasible = false;
                break;
            };
            for (_, i) in test {
                match (model.predict(&data.x[i]), data.y[i] == 1) {
                    (true, true) => tp += 1,
                    (true, false) => fp += 1,
                    (false, true) => fneg += 1,
                    _ => {}
                }
            }
        }
        if !feasible {
            continue;
        }
        let f1 = if tp == 0 { 0.0 } else { 2.0 * tp as f64 / (2 * tp + fp + fneg) as f64 };
        if best.is_none_or(|(b, _)| f1 > b) {
            best = Some((f1, k));
        }
    }
    best.map(|(_, k)| k)
        .ok_or_else(|| Error::InvalidInput("every candidate k exceeds the fold training size".into()))
}
