use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::pairs::PredictionSet;
use crate::conversation::Topic;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Heuristic {
    First,
    Prev,
    FirstPrev,
    AllPrev,
    Random,
}

impl Heuristic {
    pub const ALL: [Heuristic; 5] = [
        Heuristic::First,
        Heuristic::Prev,
        Heuristic::FirstPrev,
        Heuristic::AllPrev,
        Heuristic::Random,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Heuristic::First => "First",
            Heuristic::Prev => "Prev",
            Heuristic::FirstPrev => "FirstPrev",
            Heuristic::AllPrev => "AllPrev",
            Heuristic::Random => "Random",
        }
    }

    /// Relevant turns for turn `t`. `rng` is only consulted by `Random`.
    pub fn select(self, t: u32, rng: &mut impl Rng) -> BTreeSet<u32> {
        if t <= 1 {
            return BTreeSet::new();
        }
        match self {
            Heuristic::First => BTreeSet::from([1]),
            Heuristic::Prev => BTreeSet::from([t - 1]),
            Heuristic::FirstPrev => BTreeSet::from([1, t - 1]),
            Heuristic::AllPrev => (1..t).collect(),
            Heuristic::Random => BTreeSet::from([rng.gen_range(1..t)]),
        }
    }
}

impl fmt::Display for Heuristic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Heuristic {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key: String = s.chars().filter(|c| c.is_ascii_alphanumeric()).collect::<String>().to_ascii_lowercase();
        Ok(match key.as_str() {
            "first" | "firstutterance" => Heuristic::First,
            "prev" | "previous" | "prevutterance" => Heuristic::Prev,
            "firstprev" | "firstprevutterance" => Heuristic::FirstPrev,
            "allprev" | "allprevutterances" => Heuristic::AllPrev,
            "random" => Heuristic::Random,
            _ => return Err(Error::InvalidInput(format!("unknown heuristic `{s}`"))),
        })
    }
}

/// Applies a heuristic to every turn of every topic. Topics are visited in
/// the given order, so `Random` is reproducible for a fixed seed and input.
pub fn heuristic_predict(topics: &[Topic], strategy: Heuristic, seed: u64) -> PredictionSet {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = PredictionSet::new();
    for topic in topics {
        for turn in &topic.turns {
            let set = strategy.select(turn.number, &mut rng);
            out.insert((topic.number, turn.number), set)
                .expect("heuristics only select earlier turns");
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn nine() -> Topic {
        Topic::new(31, &["a"; 9])
    }

    #[test]
    fn definitions() {
        let t = [nine()];
        let get = |h, n| heuristic_predict(&t, h, 0).get((31, n)).cloned().unwrap();
        assert_eq!(get(Heuristic::First, 8), BTreeSet::from([1]));
        assert_eq!(get(Heuristic::Prev, 8), BTreeSet::from([7]));
        assert_eq!(get(Heuristic::FirstPrev, 2), BTreeSet::from([1]));
        assert_eq!(get(Heuristic::FirstPrev, 5), BTreeSet::from([1, 4]));
        assert_eq!(get(Heuristic::AllPrev, 4), BTreeSet::from([1, 2, 3]));
        for h in Heuristic::ALL {
            assert!(get(h, 1).is_empty());
        }
    }

    #[test]
    fn random_is_seeded() {
        let t = [nine(), Topic::new(32, &["b"; 12])];
        let a = heuristic_predict(&t, Heuristic::Random, 9);
        assert_eq!(a, heuristic_predict(&t, Heuristic::Random, 9));
        for (k, s) in a.iter() {
            if k.1 > 1 {
                assert_eq!(s.len(), 1);
                assert!(*s.iter().next().unwrap() < k.1);
            }
        }
    }

    #[test]
    fn parses_names() {
        assert_eq!("FirstPrevUtterance".parse::<Heuristic>().unwrap(), Heuristic::FirstPrev);
        assert_eq!("all-prev".parse::<Heuristic>().unwrap(), Heuristic::AllPrev);
        assert!("best".parse::<Heuristic>().is_err());
    }
}
