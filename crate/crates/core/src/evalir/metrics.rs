use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::trec::{Qrels, Run};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Metric {
    Map,
    Mrr,
    Ndcg5,
    Ndcg10,
    Ndcg20,
    P5,
    P10,
    P20,
}

impl Metric {
    pub const ALL: [Metric; 8] = [
        Metric::Map,
        Metric::Mrr,
        Metric::Ndcg5,
        Metric::Ndcg10,
        Metric::Ndcg20,
        Metric::P5,
        Metric::P10,
        Metric::P20,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Metric::Map => "MAP",
            Metric::Mrr => "MRR",
            Metric::Ndcg5 => "nDCG@5",
            Metric::Ndcg10 => "nDCG@10",
            Metric::Ndcg20 => "nDCG@20",
            Metric::P5 => "P@5",
            Metric::P10 => "P@10",
            Metric::P20 => "P@20",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key: String = s.chars().filter(|c| c.is_ascii_alphanumeric()).collect::<String>().to_ascii_lowercase();
        Metric::ALL
            .into_iter()
            .find(|m| {
                m.name()
                    .chars()
                    .filter(|c| c.is_ascii_alphanumeric())
                    .collect::<String>()
                    .eq_ignore_ascii_case(&key)
            })
            .ok_or_else(|| Error::InvalidInput(format!("unknown metric `{s}`")))
    }
}

/// One value per [`Metric`], indexed in `Metric::ALL` order.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct MetricValues(pub [f64; 8]);

impl MetricValues {
    pub fn get(&self, m: Metric) -> f64 {
        self.0[m.index()]
    }

    pub fn set(&mut self, m: Metric, v: f64) {
        self.0[m.index()] = v;
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Gain {
    /// `2^g − 1`.
    #[default]
    Exponential,
    /// `g`.
    Linear,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct EvalOptions {
    /// Minimum grade counted as relevant for MAP, MRR and P@k.
    pub rel_threshold: u32,
    pub gain: Gain,
}

impl Default for EvalOptions {
    fn default() -> Self {
        EvalOptions {
            rel_threshold: 1,
            gain: Gain::Exponential,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub per_query: BTreeMap<String, MetricValues>,
    /// Mean over `per_query`.
    pub aggregate: MetricValues,
    /// Query ids seen in the run or qrels without any relevant judgment.
    pub excluded: Vec<String>,
    /// Evaluated queries the run had no ranking for (scored as zero).
    pub missing: Vec<String>,
}

impl MetricReport {
    pub fn values(&self, m: Metric) -> Vec<f64> {
        self.per_query.values().map(|v| v.get(m)).collect()
    }
}

fn gain(grade: u32, g: Gain) -> f64 {
    match g {
        Gain::Exponential => 2f64.powi(grade as i32) - 1.0,
        Gain::Linear => grade as f64,
    }
}

fn ndcg(ranked: &[&str], grades: &BTreeMap<String, u32>, k: usize, g: Gain) -> f64 {
    let grade_of = |d: &str| grades.get(d).copied().unwrap_or(0);
    let dcg: f64 = ranked
        .iter()
        .take(k)
        .enumerate()
        .map(|(r, d)| gain(grade_of(d), g) / ((r + 2) as f64).log2())
        .sum();
    let mut ideal: Vec<u32> = grades.values().copied().filter(|&x| x > 0).collect();
    ideal.sort_unstable_by(|a, b| b.cmp(a));
    let idcg: f64 = ideal
        .iter()
        .take(k)
        .enumerate()
        .map(|(r, &x)| gain(x, g) / ((r + 2) as f64).log2())
        .sum();
    if idcg == 0.0 {
        0.0
    } else {
        dcg / idcg
    }
}

/// Metrics for a single ranking against one query's judgments.
pub fn query_metrics(ranked: &[&str], grades: &BTreeMap<String, u32>, opts: &EvalOptions) -> MetricValues {
    let relevant = |d: &str| grades.get(d).is_some_and(|&g| g >= opts.rel_threshold);
    let n_rel = grades.values().filter(|&&g| g >= opts.rel_threshold).count();
    let mut v = MetricValues::default();
    if n_rel == 0 {
        return v;
    }
    let mut hits = 0usize;
    let mut ap = 0.0;
    let mut rr = 0.0;
    // a document listed twice only counts at its first position
    let mut seen = BTreeSet::new();
    for (r, d) in ranked.iter().enumerate() {
        if seen.insert(*d) && relevant(d) {
            hits += 1;
            ap += hits as f64 / (r + 1) as f64;
            if rr == 0.0 {
                rr = 1.0 / (r + 1) as f64;
            }
        }
    }
    v.set(Metric::Map, ap / n_rel as f64);
    v.set(Metric::Mrr, rr);
    for (m, k) in [(Metric::Ndcg5, 5), (Metric::Ndcg10, 10), (Metric::Ndcg20, 20)] {
        v.set(m, ndcg(ranked, grades, k, opts.gain));
    }
    for (m, k) in [(Metric::P5, 5), (Metric::P10, 10), (Metric::P20, 20)] {
        let h = ranked.iter().take(k).filter(|d| relevant(d)).count();
        v.set(m, h as f64 / k as f64);
    }
    v
}

/// Evaluates every query that has at least one relevant judgment. Queries
/// missing from the run score zero on every metric.
pub fn eval_run(run: &Run, qrels: &Qrels, opts: &EvalOptions) -> MetricReport {
    let mut per_query = BTreeMap::new();
    let mut excluded = BTreeSet::new();
    let mut missing = Vec::new();
    for qid in qrels.qids() {
        if qrels.num_relevant(qid, opts.rel_threshold) == 0 {
            excluded.insert(qid.to_string());
            continue;
        }
        let grades = qrels.query(qid).expect("listed qid");
        let values = match run.get(qid) {
            Some(list) => {
                let ids: Vec<&str> = list.ids().collect();
                query_metrics(&ids, grades, opts)
            }
            None => {
                missing.push(qid.to_string());
                MetricValues::default()
            }
        };
        per_query.insert(qid.to_string(), values);
    }
    for qid in run.qids() {
        if !per_query.contains_key(qid) {
            excluded.insert(qid.to_string());
        }
    }
    let mut aggregate = MetricValues::default();
    if !per_query.is_empty() {
        let n = per_query.len() as f64;
        for v in per_query.values() {
            for (a, x) in aggregate.0.iter_mut().zip(v.0) {
                *a += x;
            }
        }
        aggregate.0.iter_mut().for_each(|a| *a /= n);
    }
    MetricReport {
        per_query,
        aggregate,
        excluded: excluded.into_iter().collect(),
        missing,
    }
}
