//! End-to-end steps shared by the CLI and the examples: loading inputs,
//! training predictors, building runs and composing the report tables.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{ExperimentConfig, PredictorKind};
use crate::conversation::{format_qid, load_castur, parse_topic_files, split, ConsensusLabel, Split, Topic};
use crate::error::{Error, Result};
use crate::evalir::{eval_run, read_qrels, table4_report, Metric, MetricValues, Qrels, Run, Table4};
use crate::reformulate::{batch_reformulate, Query, Strategy};
use crate::relevance::{
    candidate_pairs, classify_eval, cur_train, fit_pipeline, heuristic_predict, linear_train, metric_oriented_select,
    mlp_train, pairs_to_predictions, select_k, threshold_sweep, AweEncoder, CandidatePair, ClassificationReport,
    CurNetwork, FeatureKind, Featurizer, Heuristic, Knn, PairScore, PrecomputedEncoder, PredictionSet, Target,
    UtteranceEncoder,
};
use crate::retrieval::{ingest, load, retrieve, CorpusFormat, InvertedIndex, Model, RetrieveOptions};
use crate::textproc::load_embeddings;

pub fn load_topics(cfg: &ExperimentConfig) -> Result<Vec<Topic>> {
    if cfg.paths.topics.is_empty() {
        return Err(Error::Config("no topic files configured (paths.topics)".into()));
    }
    parse_topic_files(&cfg.paths.topics)
}

pub fn load_labels(cfg: &ExperimentConfig) -> Result<Option<Vec<ConsensusLabel>>> {
    cfg.paths.castur.as_ref().map(load_castur).transpose()
}

pub fn require_labels(cfg: &ExperimentConfig) -> Result<Vec<ConsensusLabel>> {
    load_labels(cfg)?.ok_or_else(|| Error::Config("relevance labels required (paths.castur)".into()))
}

pub fn load_qrels(cfg: &ExperimentConfig) -> Result<Qrels> {
    let path = cfg
        .paths
        .qrels
        .as_ref()
        .ok_or_else(|| Error::Config("qrels required (paths.qrels)".into()))?;
    read_qrels(path)
}

/// Indexes the configured corpus.
pub fn build_index(cfg: &ExperimentConfig) -> Result<InvertedIndex> {
    let path = cfg
        .paths
        .corpus
        .as_ref()
        .ok_or_else(|| Error::Config("corpus required (paths.corpus)".into()))?;
    let corpus = ingest(path, CorpusFormat::from_path(path))?;
    if cfg.retrieval.build_threads > 1 {
        InvertedIndex::build_parallel(&corpus, cfg.retrieval.build_threads)
    } else {
        InvertedIndex::build(&corpus)
    }
}

/// The persisted index when one exists, otherwise a fresh build.
pub fn open_index(cfg: &ExperimentConfig) -> Result<InvertedIndex> {
    match &cfg.paths.index {
        Some(p) if p.exists() => load(p),
        _ => build_index(cfg),
    }
}

/// Labels of the given topics only.
pub fn labels_for(labels: &[ConsensusLabel], topics: &[Topic]) -> Vec<ConsensusLabel> {
    let keep: BTreeSet<u32> = topics.iter().map(|t| t.number).collect();
    labels.iter().filter(|l| keep.contains(&l.topic)).cloned().collect()
}

/// Judgments of the given topics only.
pub fn qrels_for(qrels: &Qrels, topics: &[Topic]) -> Result<Qrels> {
    let keep: BTreeSet<String> = topics
        .iter()
        .flat_map(|t| t.turns.iter().map(move |u| format_qid(t.number, u.number)))
        .collect();
    let mut out = Qrels::new();
    for qid in qrels.qids().filter(|q| keep.contains(*q)) {
        for (doc, grade) in qrels.query(qid).expect("listed qid") {
            out.insert(qid, doc.as_str(), *grade)?;
        }
    }
    Ok(out)
}

pub fn topic_split(cfg: &ExperimentConfig, topics: &[Topic]) -> Result<Split> {
    split(topics, &cfg.split, cfg.seed)
}

fn featurizer(cfg: &ExperimentConfig, kind: FeatureKind, topics: &[Topic]) -> Result<Featurizer> {
    Ok(match kind {
        FeatureKind::Tfidf => Featurizer::tfidf_over(topics),
        FeatureKind::Awe => {
            let path = cfg
                .paths
                .embeddings
                .as_ref()
                .ok_or_else(|| Error::Config("AWE features need paths.embeddings".into()))?;
            Featurizer::Awe(load_embeddings(path)?)
        }
    })
}

fn encoder(cfg: &ExperimentConfig) -> Result<Box<dyn UtteranceEncoder>> {
    if let Some(p) = &cfg.paths.utterance_vectors {
        return Ok(Box::new(PrecomputedEncoder::from_file(p)?));
    }
    if let Some(p) = &cfg.paths.embeddings {
        return Ok(Box::new(AweEncoder(load_embeddings(p)?)));
    }
    Err(Error::Config(
        "the CUR network needs paths.utterance_vectors or paths.embeddings".into(),
    ))
}

/// A learned pair scorer's display name.
pub fn model_name(kind: PredictorKind, features: FeatureKind) -> String {
    match (kind, features) {
        (PredictorKind::Knn, FeatureKind::Tfidf) => "kNN".into(),
        (PredictorKind::Knn, FeatureKind::Awe) => "kNN-AWE".into(),
        (PredictorKind::Linear, FeatureKind::Tfidf) => "LinearSVM".into(),
        (PredictorKind::Linear, FeatureKind::Awe) => "LinearSVM-AWE".into(),
        (PredictorKind::Mlp, FeatureKind::Tfidf) => "MLP".into(),
        (PredictorKind::Mlp, FeatureKind::Awe) => "MLP-AWE".into(),
        (PredictorKind::Cur, _) => "CUR".into(),
        (PredictorKind::Heuristic, _) => "heuristic".into(),
        (PredictorKind::Gold, _) => "gold".into(),
    }
}

/// Trains a learned predictor on `train` pairs and scores `pairs`.
pub fn pair_scores(
    cfg: &ExperimentConfig,
    kind: PredictorKind,
    features: FeatureKind,
    all_topics: &[Topic],
    train: &[CandidatePair],
    pairs: &[CandidatePair],
) -> Result<Vec<PairScore>> {
    let spec = &cfg.predictor;
    match kind {
        PredictorKind::Knn => {
            let f = featurizer(cfg, features, all_topics)?;
            let model = fit_pipeline(train, f, false, |d| {
                let k = match spec.k {
                    Some(k) => k,
                    None => select_k(d, &(1..=25).step_by(2).collect::<Vec<_>>(), 5, cfg.seed)?,
                };
                log::info!("kNN with k = {k}");
                Knn::fit(d.clone(), k)
            })?;
            model.score_pairs(pairs)
        }
        PredictorKind::Linear => {
            let f = featurizer(cfg, features, all_topics)?;
            fit_pipeline(train, f, true, |d| linear_train(d, &spec.linear))?.score_pairs(pairs)
        }
        PredictorKind::Mlp => {
            let f = featurizer(cfg, features, all_topics)?;
            let mut mc = spec.mlp.clone();
            mc.seed = cfg.seed;
            fit_pipeline(train, f, true, |d| mlp_train(d, &mc))?.score_pairs(pairs)
        }
        PredictorKind::Cur => {
            let mut cc = spec.cur.clone();
            cc.seed = cfg.seed;
            let net = CurNetwork::new(encoder(cfg)?, &cc)?;
            let trained = cur_train(train, net, &cc)?;
            log::info!(
                "CUR training loss {:?} -> {:?}",
                trained.loss_curve.first(),
                trained.loss_curve.last()
            );
            trained.net.score_pairs(pairs)
        }
        PredictorKind::Heuristic | PredictorKind::Gold => Err(Error::InvalidInput(format!(
            "{kind:?} is not a learned pair scorer"
        ))),
    }
}

/// Predictions for every turn of every topic, plus how they were chosen.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictorOutput {
    pub name: String,
    pub predictions: PredictionSet,
    /// Decision threshold picked on dev, for learned predictors.
    pub threshold: Option<f64>,
    /// Dev-set score of the chosen threshold.
    pub dev: Option<ClassificationReport>,
}

/// Runs the configured predictor. Learned predictors train on the train
/// split and tune their threshold for `target` on dev.
pub fn run_predictor(
    cfg: &ExperimentConfig,
    topics: &[Topic],
    labels: Option<&[ConsensusLabel]>,
    target: Target,
) -> Result<PredictorOutput> {
    let spec = &cfg.predictor;
    match spec.kind {
        PredictorKind::Heuristic => Ok(PredictorOutput {
            name: spec.heuristic.name().to_string(),
            predictions: heuristic_predict(topics, spec.heuristic, cfg.seed),
            threshold: None,
            dev: None,
        }),
        PredictorKind::Gold => {
            let labels = labels.ok_or_else(|| Error::Config("gold predictions need labels".into()))?;
            Ok(PredictorOutput {
                name: "gold".into(),
                predictions: PredictionSet::from_labels(labels),
                threshold: None,
                dev: None,
            })
        }
        kind => {
            let labels = labels.ok_or_else(|| Error::Config(format!("training {kind:?} needs labels")))?;
            let sp = topic_split(cfg, topics)?;
            let train = candidate_pairs(&sp.train, Some(labels));
            let pairs = candidate_pairs(topics, None);
            let scores = pair_scores(cfg, kind, spec.features, topics, &train, &pairs)?;
            let name = model_name(kind, spec.features);
            let dev_gold = labels_for(labels, &sp.dev);
            let (threshold, dev) = if dev_gold.is_empty() {
                log::warn!("no labeled dev turns; using threshold 0.5");
                (0.5, None)
            } else {
                let dev_topics: BTreeSet<u32> = sp.dev.iter().map(|t| t.number).collect();
                let dev_scores: Vec<PairScore> =
                    scores.iter().filter(|s| dev_topics.contains(&s.topic)).cloned().collect();
                let cands = threshold_sweep(&name, &sp.dev, &dev_scores, &spec.thresholds);
                let sel = metric_oriented_select(&cands, &dev_gold, target)?;
                (sel.threshold, Some(sel.report))
            };
            Ok(PredictorOutput {
                name,
                predictions: pairs_to_predictions(topics, &scores, threshold),
                threshold: Some(threshold),
                dev,
            })
        }
    }
}

/// One query per turn under `strategy`.
pub fn queries_for(
    topics: &[Topic],
    strategy: Strategy,
    preds: Option<&PredictionSet>,
    labels: Option<&[ConsensusLabel]>,
) -> Result<Vec<Query>> {
    batch_reformulate(topics, strategy, preds, labels)
}

/// Retrieves every query; queries with nothing to match get an empty list.
pub fn run_queries(idx: &InvertedIndex, queries: &[Query], model: Model, cfg: &ExperimentConfig, tag: &str) -> Result<Run> {
    let opts = RetrieveOptions {
        params: cfg.retrieval.params,
        exhaustive_ql: cfg.retrieval.exhaustive_ql,
    };
    let lists = queries
        .par_iter()
        .map(|q| retrieve(&q.tokens, model, cfg.retrieval.depth, idx, &opts).map(|r| (format_qid(q.topic, q.turn), r.ranked)))
        .collect::<Result<Vec<_>>>()?;
    let mut run = Run::new(tag);
    for (qid, list) in lists {
        run.insert(qid, list);
    }
    Ok(run)
}

pub fn run_tag(strategy: Strategy, model: Model) -> String {
    format!("{}_{}", strategy, model.name())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table3Row {
    pub predictor: String,
    pub report: ClassificationReport,
}

/// Classification quality of every predictor on the test split. Learned
/// models use their own decision rule (score ≥ 0.5).
pub fn table3(cfg: &ExperimentConfig, topics: &[Topic], labels: &[ConsensusLabel]) -> Result<Vec<Table3Row>> {
    let sp = topic_split(cfg, topics)?;
    let gold = labels_for(labels, &sp.test);
    if gold.is_empty() {
        return Err(Error::Coverage("no labeled turns in the test split".into()));
    }
    let mut rows = Vec::new();
    let mut add = |name: String, preds: &PredictionSet| -> Result<()> {
        rows.push(Table3Row {
            predictor: name,
            report: classify_eval(preds, &gold, None)?,
        });
        Ok(())
    };
    for h in Heuristic::ALL {
        add(format!("{}Utterance{}", h.name(), if h == Heuristic::AllPrev { "s" } else { "" }), &heuristic_predict(&sp.test, h, cfg.seed))?;
    }
    let train = candidate_pairs(&sp.train, Some(labels));
    let pairs = candidate_pairs(&sp.test, None);
    let mut learned = vec![
        (PredictorKind::Knn, FeatureKind::Tfidf),
        (PredictorKind::Linear, FeatureKind::Tfidf),
        (PredictorKind::Mlp, FeatureKind::Tfidf),
    ];
    if cfg.paths.embeddings.is_some() {
        learned.insert(1, (PredictorKind::Knn, FeatureKind::Awe));
    }
    if cfg.paths.embeddings.is_some() || cfg.paths.utterance_vectors.is_some() {
        learned.push((PredictorKind::Cur, FeatureKind::Tfidf));
    }
    for (kind, features) in learned {
        let scores = pair_scores(cfg, kind, features, topics, &train, &pairs)?;
        add(model_name(kind, features), &pairs_to_predictions(&sp.test, &scores, 0.5))?;
    }
    Ok(rows)
}

pub fn table3_csv(rows: &[Table3Row]) -> String {
    let mut out = String::from("predictor,precision,recall,f1,macro_precision,macro_recall,macro_f1\n");
    for r in rows {
        let m = &r.report;
        let _ = writeln!(
            out,
            "{},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6}",
            r.predictor, m.precision, m.recall, m.f1, m.macro_avg.precision, m.macro_avg.recall, m.macro_avg.f1
        );
    }
    out
}

/// Queries judged for retrieval evaluation: all of them, or only those of
/// the test split when `retrieval.evaluate_test_only` is set.
fn eval_qrels(cfg: &ExperimentConfig, topics: &[Topic], qrels: &Qrels) -> Result<Qrels> {
    if cfg.retrieval.evaluate_test_only {
        qrels_for(qrels, &topic_split(cfg, topics)?.test)
    } else {
        Ok(qrels.clone())
    }
}

/// Every configured strategy × scorer run, and the grid built from them.
/// PrU uses the configured predictor tuned for its configured target;
/// Oracle and learned PrU are skipped (left as gaps) without labels.
pub fn table4(
    cfg: &ExperimentConfig,
    topics: &[Topic],
    labels: Option<&[ConsensusLabel]>,
    idx: &InvertedIndex,
    qrels: &Qrels,
) -> Result<(Table4, BTreeMap<(Model, Strategy), Run>)> {
    let needs_labels = !matches!(cfg.predictor.kind, PredictorKind::Heuristic);
    let preds = if cfg.strategies.contains(&Strategy::PrU) && (labels.is_some() || !needs_labels) {
        Some(run_predictor(cfg, topics, labels, cfg.predictor.target)?.predictions)
    } else {
        None
    };
    let mut runs = BTreeMap::new();
    for &s in &cfg.strategies {
        let queries = match s {
            Strategy::PrU if preds.is_none() => continue,
            Strategy::Oracle if labels.is_none() => continue,
            _ => queries_for(topics, s, preds.as_ref(), labels)?,
        };
        for &m in &cfg.scorers {
            runs.insert((m, s), run_queries(idx, &queries, m, cfg, &run_tag(s, m))?);
        }
    }
    let table = table4_report(&runs, &eval_qrels(cfg, topics, qrels)?, &cfg.metrics)?;
    Ok((table, runs))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table5Row {
    pub target: Target,
    pub threshold: Option<f64>,
    /// Test-split classification quality.
    pub classification: ClassificationReport,
    /// QL retrieval with PrU built from these predictions.
    pub retrieval: MetricValues,
}

/// Metric-oriented selection: one PrU configuration per target metric.
pub fn table5(
    cfg: &ExperimentConfig,
    topics: &[Topic],
    labels: &[ConsensusLabel],
    idx: &InvertedIndex,
    qrels: &Qrels,
) -> Result<Vec<Table5Row>> {
    let sp = topic_split(cfg, topics)?;
    let gold = labels_for(labels, &sp.test);
    let judged = eval_qrels(cfg, topics, qrels)?;
    let mut rows = Vec::new();
    for target in [Target::Precision, Target::Recall, Target::F1] {
        let out = run_predictor(cfg, topics, Some(labels), target)?;
        let classification = classify_eval(&out.predictions.restrict(&sp.test), &gold, None)?;
        let queries = queries_for(topics, Strategy::PrU, Some(&out.predictions), None)?;
        let run = run_queries(idx, &queries, Model::Ql, cfg, &format!("PrU_{target}"))?;
        rows.push(Table5Row {
            target,
            threshold: out.threshold,
            classification,
            retrieval: eval_run(&run, &judged, &cfg.metrics).aggregate,
        });
    }
    Ok(rows)
}

pub fn table5_csv(rows: &[Table5Row]) -> String {
    let mut out = String::from("run,threshold,precision,recall,f1,map,ndcg@20,p@20\n");
    for r in rows {
        let c = &r.classification;
        let _ = writeln!(
            out,
            "PrU_{},{},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6}",
            r.target,
            r.threshold.map(|t| format!("{t:.2}")).unwrap_or_default(),
            c.precision,
            c.recall,
            c.f1,
            r.retrieval.get(Metric::Map),
            r.retrieval.get(Metric::Ndcg20),
            r.retrieval.get(Metric::P20)
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::conversation::LabelSource;

    #[test]
    fn restriction_helpers() {
        let topics = vec![Topic::new(2, &["a", "b"])];
        let labels = vec![
            ConsensusLabel::new(1, 2, [1], LabelSource::Agreement).unwrap(),
            ConsensusLabel::new(2, 2, [1], LabelSource::Agreement).unwrap(),
        ];
        assert_eq!(labels_for(&labels, &topics), vec![labels[1].clone()]);
        let mut q = Qrels::new();
        q.insert("1_1", "d", 1).unwrap();
        q.insert("2_2", "d", 2).unwrap();
        let r = qrels_for(&q, &topics).unwrap();
        assert_eq!(r.qids().collect::<Vec<_>>(), ["2_2"]);
        assert_eq!(r.grade("2_2", "d"), 2);
    }
}
