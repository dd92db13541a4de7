//! Turn-relevance prediction: which earlier turns of a conversation matter
//! for the current one.

mod cur;
mod eval;
mod features;
mod heuristic;
mod knn;
mod linear;
mod mlp;
pub mod nn;
mod pairs;

pub use cur::{
    cur_train, AweEncoder, CurConfig, CurNetwork, CurParams, CurTraining, EncodedPair, PrecomputedEncoder,
    UtteranceEncoder,
};
pub use eval::{classify_eval, metric_oriented_select, threshold_sweep, Candidate, ClassificationReport, Prf, Selection, Target};
pub use features::{Dataset, FeatureKind, Featurizer, Standardizer, FEATURE_DIM};
pub use heuristic::{heuristic_predict, Heuristic};
pub use knn::{select_k, Knn};
pub use linear::{linear_train, LinearConfig, LinearSvm};
pub use mlp::{mlp_train, Mlp, MlpConfig};
pub use pairs::{candidate_pairs, pairs_to_predictions, CandidatePair, PairScore, PredictionSet};

use crate::conversation::Topic;
use crate::error::Result;

/// A binary pair classifier over feature rows.
pub trait Classifier {
    /// Confidence that the pair is relevant, in `[0, 1]`.
    fn score(&self, x: &[f64]) -> f64;

    fn predict(&self, x: &[f64]) -> bool {
        self.score(x) >= 0.5
    }
}

/// A trained classifier together with its feature pipeline.
pub struct PairModel<C> {
    pub featurizer: Featurizer,
    pub scaler: Option<Standardizer>,
    pub classifier: C,
}

impl<C: Classifier> PairModel<C> {
    fn row(&self, pair: &CandidatePair) -> Result<Vec<f64>> {
        let x = self.featurizer.features(pair)?;
        Ok(match &self.scaler {
            Some(s) => s.apply(&x),
            None => x,
        })
    }

    pub fn score_pairs(&self, pairs: &[CandidatePair]) -> Result<Vec<PairScore>> {
        pairs
            .iter()
            .map(|p| {
                Ok(PairScore {
                    topic: p.topic,
                    i: p.i,
                    j: p.j,
                    p: self.classifier.score(&self.row(p)?),
                })
            })
            .collect()
    }

    /// Per-turn sets from the classifier's own decisions, with scores
    /// attached. Every turn of `topics` gets an entry.
    pub fn predict(&self, topics: &[Topic]) -> Result<PredictionSet> {
        let pairs = candidate_pairs(topics, None);
        let mut out = pairs_to_predictions(topics, &[], 0.5);
        for p in &pairs {
            let x = self.row(p)?;
            let key = p.turn_key();
            out.set_score(key, p.j, self.classifier.score(&x));
            if self.classifier.predict(&x) {
                let mut set = out.get(key).cloned().unwrap_or_default();
                set.insert(p.j);
                out.insert(key, set)?;
            }
        }
        Ok(out)
    }
}

/// Trains a feature pipeline on labeled pairs. With `standardize`, features
/// are z-scored using training statistics.
pub fn fit_pipeline<C>(
    pairs: &[CandidatePair],
    featurizer: Featurizer,
    standardize: bool,
    train: impl FnOnce(&Dataset) -> Result<C>,
) -> Result<PairModel<C>> {
    let mut data = Dataset::from_pairs(pairs, &featurizer)?;
    let scaler = if standardize {
        let s = Standardizer::fit(&data.x)?;
        data.x = s.apply_all(&data.x);
        Some(s)
    } else {
        None
    };
    let classifier = train(&data)?;
    Ok(PairModel {
        featurizer,
        scaler,
        classifier,
    })
}

/// k-NN over pair features. `k = None` selects k by 5-fold
/// cross-validation over odd values up to 25.
pub fn knn_predict(
    train_pairs: &[CandidatePair],
    eval_topics: &[Topic],
    featurizer: Featurizer,
    k: Option<usize>,
    seed: u64,
) -> Result<PredictionSet> {
    let model = fit_pipeline(train_pairs, featurizer, false, |d| {
        let k = match k {
            Some(k) => k,
            None => select_k(d, &(1..=25).step_by(2).collect::<Vec<_>>(), 5, seed)?,
        };
        Knn::fit(d.clone(), k)
    })?;
    model.predict(eval_topics)
}
