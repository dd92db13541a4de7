//! Experiment configuration: one TOML file, overridable from the
//! environment.
//!
//! Any key can be overridden with `CONVREL_<SECTION>__<KEY>=value`
//! (double underscore between nesting levels, case-insensitive), e.g.
//! `CONVREL_SEED=7` or `CONVREL_RETRIEVAL__DEPTH=100`. Values are read as
//! TOML literals when they parse as one (`[\"PrU\", \"FU\"]`, `true`, `0.5`)
//! and as plain strings otherwise.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::conversation::{SplitScheme, DEFAULT_SEED};
use crate::error::{Error, Result};
use crate::evalir::EvalOptions;
use crate::reformulate::Strategy;
use crate::relevance::{CurConfig, FeatureKind, Heuristic, LinearConfig, MlpConfig, Target};
use crate::retrieval::{Model, ScoringParams};

pub const ENV_PREFIX: &str = "CONVREL_";

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Paths {
    /// One or more CAsT-style topic files.
    pub topics: Vec<PathBuf>,
    pub castur: Option<PathBuf>,
    pub corpus: Option<PathBuf>,
    pub qrels: Option<PathBuf>,
    pub embeddings: Option<PathBuf>,
    /// Precomputed utterance vectors for the CUR network.
    pub utterance_vectors: Option<PathBuf>,
    /// Persisted index; built from `corpus` when absent on disk.
    pub index: Option<PathBuf>,
    /// Annotation log used by `serve`.
    pub annotations: Option<PathBuf>,
}

/// Which relevance predictor feeds PrU.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PredictorKind {
    Heuristic,
    Knn,
    Linear,
    Mlp,
    Cur,
    /// The consensus labels themselves.
    Gold,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PredictorSpec {
    pub kind: PredictorKind,
    pub heuristic: Heuristic,
    pub features: FeatureKind,
    /// Fixed k; chosen by cross-validation when absent.
    pub k: Option<usize>,
    /// Metric the decision threshold is tuned for on dev.
    pub target: Target,
    pub thresholds: Vec<f64>,
    pub linear: LinearConfig,
    pub mlp: MlpConfig,
    pub cur: CurConfig,
}

impl Default for PredictorSpec {
    fn default() -> Self {
        PredictorSpec {
            kind: PredictorKind::Cur,
            heuristic: Heuristic::First,
            features: FeatureKind::Tfidf,
            k: None,
            target: Target::Precision,
            thresholds: (1..=19).map(|k| k as f64 / 20.0).collect(),
            linear: LinearConfig::default(),
            mlp: MlpConfig::default(),
            cur: CurConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RetrievalSection {
    pub depth: usize,
    pub exhaustive_ql: bool,
    pub params: ScoringParams,
    /// Threads used to build the index; the result does not depend on it.
    pub build_threads: usize,
    /// Evaluate retrieval only on test-split queries, so learned PrU
    /// predictions are never scored on the topics they were trained on.
    pub evaluate_test_only: bool,
}

impl Default for RetrievalSection {
    fn default() -> Self {
        RetrievalSection {
            depth: 1000,
            exhaustive_ql: false,
            params: ScoringParams::default(),
            build_threads: 1,
            evaluate_test_only: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ServeSection {
    pub addr: String,
    pub annotators: usize,
}

impl Default for ServeSection {
    fn default() -> Self {
        ServeSection {
            addr: "127.0.0.1:8080".into(),
            annotators: 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub paths: Paths,
    pub strategies: Vec<Strategy>,
    pub scorers: Vec<Model>,
    pub predictor: PredictorSpec,
    pub seed: u64,
    pub split: SplitScheme,
    pub retrieval: RetrievalSection,
    pub metrics: EvalOptions,
    pub serve: ServeSection,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            paths: Paths::default(),
            strategies: Strategy::ALL.to_vec(),
            scorers: Model::ALL.to_vec(),
            predictor: PredictorSpec::default(),
            seed: DEFAULT_SEED,
            split: SplitScheme::default(),
            retrieval: RetrievalSection::default(),
            metrics: EvalOptions::default(),
            serve: ServeSection::default(),
        }
    }
}

impl ExperimentConfig {
    /// Parses TOML text, then applies `overrides` as `(dotted.key, value)`.
    /// Relative paths are kept as written.
    pub fn from_toml_with(text: &str, overrides: &[(String, String)]) -> Result<Self> {
        let mut root: toml::Table = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        for (key, value) in overrides {
            set_path(&mut root, key, value)?;
        }
        root.try_into().map_err(|e: toml::de::Error| Error::Config(e.to_string()))
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        Self::from_toml_with(text, &[])
    }

    /// Loads `path` (or defaults when `None`) and applies environment
    /// overrides. Relative paths in the file resolve against its directory.
    pub fn load(path: Option<&Path>) -> Result<Self> {
        let text = match path {
            Some(p) => std::fs::read_to_string(p).map_err(|e| Error::io(p, e))?,
            None => String::new(),
        };
        let mut cfg = Self::from_toml_with(&text, &env_overrides(std::env::vars()))?;
        if let Some(dir) = path.and_then(Path::parent) {
            cfg.paths.rebase(dir);
        }
        Ok(cfg)
    }

    /// Every configured path must exist; lists must be non-empty.
    pub fn validate(&self) -> Result<()> {
        let p = &self.paths;
        let inputs = p
            .topics
            .iter()
            .chain(p.castur.iter())
            .chain(p.corpus.iter())
            .chain(p.qrels.iter())
            .chain(p.embeddings.iter())
            .chain(p.utterance_vectors.iter());
        for path in inputs {
            if !path.exists() {
                return Err(Error::Config(format!("{} does not exist", path.display())));
            }
        }
        if self.strategies.is_empty() {
            return Err(Error::Config("no strategies configured".into()));
        }
        if self.scorers.is_empty() {
            return Err(Error::Config("no scorers configured".into()));
        }
        if self.retrieval.depth == 0 {
            return Err(Error::Config("retrieval depth must be at least 1".into()));
        }
        if self.predictor.thresholds.is_empty() {
            return Err(Error::Config("no decision thresholds configured".into()));
        }
        Ok(())
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string_pretty(self).map_err(|e| Error::Config(e.to_string()))
    }
}

impl Paths {
    fn rebase(&mut self, dir: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = dir.join(&*p);
            }
        };
        self.topics.iter_mut().for_each(fix);
        for p in [
            &mut self.castur,
            &mut self.corpus,
            &mut self.qrels,
            &mut self.embeddings,
            &mut self.utterance_vectors,
            &mut self.index,
            &mut self.annotations,
        ]
        .into_iter()
        .flatten()
        {
            fix(p);
        }
    }
}

/// `CONVREL_A__B=v` → `("a.b", "v")`.
pub fn env_overrides(vars: impl IntoIterator<Item = (String, String)>) -> Vec<(String, String)> {
    let mut out: Vec<(String, String)> = vars
        .into_iter()
        .filter_map(|(k, v)| {
            let rest = k.strip_prefix(ENV_PREFIX)?;
            (!rest.is_empty()).then(|| (rest.to_ascii_lowercase().replace("__", "."), v))
        })
        .collect();
    out.sort();
    out
}

fn set_path(root: &mut toml::Table, dotted: &str, raw: &str) -> Result<()> {
    let parts: Vec<&str> = dotted.split('.').collect();
    let mut table = root;
    for part in &parts[..parts.len() - 1] {
        let entry = table
            .entry(part.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        table = entry
            .as_table_mut()
            .ok_or_else(|| Error::Config(format!("override `{dotted}`: `{part}` is not a section")))?;
    }
    let value = toml::from_str::<toml::Table>(&format!("v = {raw}"))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()));
    // list-valued keys also take comma-separated bare words
    let value = match (&value, parts.last()) {
        (toml::Value::String(s), Some(&("strategies" | "scorers" | "topics" | "thresholds"))) => toml::Value::Array(
            s.split(',')
                .map(|x| {
                    let x = x.trim();
                    x.parse::<f64>()
                        .map(toml::Value::Float)
                        .unwrap_or_else(|_| toml::Value::String(x.to_string()))
                })
                .collect(),
        ),
        _ => value,
    };
    table.insert(parts[parts.len() - 1].to_string(), value);
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evalir::Gain;

    #[test]
    fn defaults_round_trip() {
        let cfg = ExperimentConfig::default();
        assert_eq!(ExperimentConfig::from_toml(&cfg.to_toml().unwrap()).unwrap(), cfg);
        assert_eq!(ExperimentConfig::from_toml("").unwrap(), cfg);
    }

    #[test]
    fn file_and_overrides() {
        let text = r#"
seed = 3
strategies = ["Orig", "PrU"]
scorers = ["ql"]
[retrieval]
depth = 50
[metrics]
rel_threshold = 2
gain = "linear"
[predictor]
kind = "linear"
target = "Recall"
"#;
        let cfg = ExperimentConfig::from_toml(text).unwrap();
        assert_eq!(cfg.seed, 3);
        assert_eq!(cfg.strategies, vec![Strategy::Orig, Strategy::PrU]);
        assert_eq!(cfg.metrics.gain, Gain::Linear);
        assert_eq!(cfg.predictor.kind, PredictorKind::Linear);

        let env = env_overrides([
            ("CONVREL_SEED".to_string(), "9".to_string()),
            ("CONVREL_RETRIEVAL__EXHAUSTIVE_QL".to_string(), "true".to_string()),
            ("CONVREL_SCORERS".to_string(), "bm25,dfr".to_string()),
            ("CONVREL_PATHS__QRELS".to_string(), "/tmp/q.txt".to_string()),
            ("HOME".to_string(), "/root".to_string()),
        ]);
        assert_eq!(env.len(), 4);
        let cfg = ExperimentConfig::from_toml_with(text, &env).unwrap();
        assert_eq!(cfg.seed, 9);
        assert!(cfg.retrieval.exhaustive_ql);
        assert_eq!(cfg.retrieval.depth, 50);
        assert_eq!(cfg.scorers, vec![Model::Bm25, Model::Dfr]);
        assert_eq!(cfg.paths.qrels, Some(PathBuf::from("/tmp/q.txt")));
    }

    #[test]
    fn closed_vocabularies_and_paths() {
        assert!(ExperimentConfig::from_toml("strategies = [\"Magic\"]").is_err());
        assert!(ExperimentConfig::from_toml("scorers = [\"tfidf\"]").is_err());
        assert!(ExperimentConfig::from_toml("colour = 1").is_err());
        let cfg = ExperimentConfig::from_toml("[paths]\nqrels = \"/definitely/not/here\"").unwrap();
        assert!(matches!(cfg.validate(), Err(Error::Config(_))));
    }
}
