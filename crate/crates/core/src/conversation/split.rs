use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::topics::Topic;
use crate::error::{Error, Result};

pub const DEFAULT_SEED: u64 = 42;

/// How topics are partitioned into train/dev/test.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum SplitScheme {
    /// Topics numbered up to `max_test_topic` (the track's training
    /// conversations) form the test set; the remaining topics form the
    /// training pool, from which `dev_fraction` of topics are drawn as dev.
    Paper { max_test_topic: u32, dev_fraction: f64 },
    /// Shuffled topic-level split with the given ratios.
    Ratios { train: f64, dev: f64, test: f64 },
}

impl Default for SplitScheme {
    fn default() -> Self {
        SplitScheme::Paper {
            max_test_topic: 30,
            dev_fraction: 0.1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Split {
    pub train: Vec<Topic>,
    pub dev: Vec<Topic>,
    pub test: Vec<Topic>,
}

impl Split {
    pub fn numbers(topics: &[Topic]) -> Vec<u32> {
        topics.iter().map(|t| t.number).collect()
    }
}

fn sorted(mut v: Vec<Topic>) -> Vec<Topic> {
    v.sort_by_key(|t| t.number);
    v
}

/// Partitions whole topics. Selection is seeded and reproducible.
pub fn split(topics: &[Topic], scheme: &SplitScheme, seed: u64) -> Result<Split> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    match *scheme {
        SplitScheme::Paper {
            max_test_topic,
            dev_fraction,
        } => {
            if !(0.0..=1.0).contains(&dev_fraction) {
                return Err(Error::InvalidInput("dev fraction must lie in [0, 1]".into()));
            }
            let (test, mut pool): (Vec<Topic>, Vec<Topic>) =
                topics.iter().cloned().partition(|t| t.number <= max_test_topic);
            pool.sort_by_key(|t| t.number);
            pool.shuffle(&mut rng);
            let n_dev = (pool.len() as f64 * dev_fraction).round() as usize;
            let train = pool.split_off(n_dev);
            Ok(Split {
                train: sorted(train),
                dev: sorted(pool),
                test: sorted(test),
            })
        }
        SplitScheme::Ratios { train, dev, test } => {
            if [train, dev, test].iter().any(|r| *r < 0.0) || (train + dev + test - 1.0).abs() > 1e-9 {
                return Err(Error::InvalidInput(format!(
                    "split ratios {train}/{dev}/{test} must be non-negative and sum to 1"
                )));
            }
            let mut all: Vec<Topic> = topics.to_vec();
            all.sort_by_key(|t| t.number);
            all.shuffle(&mut rng);
            let n = all.len();
            let n_test = (n as f64 * test).round() as usize;
            let n_dev = ((n as f64 * dev).round() as usize).min(n - n_test);
            let rest = all.split_off(n_test);
            let test_set = all;
            let mut rest = rest;
            let train_set = rest.split_off(n_dev);
            Ok(Split {
                train: sorted(train_set),
                dev: sorted(rest),
                test: sorted(test_set),
            })
        }
    }
}
