//! Dataset statistics, label position analyses, category flow and
//! performance breakdowns.

mod figures;

pub use figures::{plot_data, write_plot_data, Figure, PlotInputs};

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::conversation::{parse_qid, total_turns, ConsensusLabel, LabelSummary, Topic, TurnKey};
use crate::error::Result;
use crate::evalir::{Metric, MetricValues};
use crate::textproc::{categorize, tokenize, QuestionCategory};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanSd {
    pub mean: f64,
    /// Sample standard deviation; 0 for fewer than two values.
    pub sd: f64,
}

impl MeanSd {
    pub fn of(values: &[f64]) -> Self {
        if values.is_empty() {
            return MeanSd { mean: 0.0, sd: 0.0 };
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let sd = if values.len() < 2 {
            0.0
        } else {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
        };
        MeanSd { mean, sd }
    }
}

/// Linear-interpolation quantile of sorted values.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FiveNumber {
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
}

impl FiveNumber {
    pub fn of(values: &[f64]) -> Option<Self> {
        if values.is_empty() {
            return None;
        }
        let mut v = values.to_vec();
        v.sort_by(f64::total_cmp);
        Some(FiveNumber {
            min: v[0],
            q1: quantile(&v, 0.25),
            median: quantile(&v, 0.5),
            q3: quantile(&v, 0.75),
            max: v[v.len() - 1],
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BasicStats {
    pub conversations: usize,
    pub turns: usize,
    pub turns_per_topic: MeanSd,
    pub median_turns: f64,
    /// Tokens per utterance before stopword removal.
    pub terms_per_turn: MeanSd,
    pub labels: Option<LabelSummary>,
}

pub fn basic_stats(topics: &[Topic], labels: Option<&[ConsensusLabel]>) -> BasicStats {
    let lens: Vec<f64> = topics.iter().map(|t| t.turns.len() as f64).collect();
    let terms: Vec<f64> = topics
        .iter()
        .flat_map(|t| t.turns.iter().map(|u| tokenize(&u.raw_utterance).len() as f64))
        .collect();
    let mut sorted = lens.clone();
    sorted.sort_by(f64::total_cmp);
    BasicStats {
        conversations: topics.len(),
        turns: total_turns(topics),
        turns_per_topic: MeanSd::of(&lens),
        median_turns: if sorted.is_empty() { 0.0 } else { quantile(&sorted, 0.5) },
        terms_per_turn: MeanSd::of(&terms),
        labels: labels.map(LabelSummary::of),
    }
}

/// Category of every turn.
pub fn turn_categories(topics: &[Topic]) -> Result<BTreeMap<TurnKey, QuestionCategory>> {
    let mut out = BTreeMap::new();
    for t in topics {
        for u in &t.turns {
            out.insert((t.number, u.number), categorize(&u.raw_utterance)?);
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CategoryDistribution {
    pub counts: BTreeMap<QuestionCategory, usize>,
    pub shares: BTreeMap<QuestionCategory, f64>,
    /// Most frequent category per topic; ties go to the earlier category.
    pub leaders: BTreeMap<u32, QuestionCategory>,
    pub topics_led: BTreeMap<QuestionCategory, usize>,
}

pub fn category_distribution(topics: &[Topic]) -> Result<CategoryDistribution> {
    let cats = turn_categories(topics)?;
    let mut counts: BTreeMap<QuestionCategory, usize> = QuestionCategory::ALL.iter().map(|c| (*c, 0)).collect();
    let mut per_topic: BTreeMap<u32, [usize; 9]> = BTreeMap::new();
    for (&(topic, _), &c) in &cats {
        *counts.get_mut(&c).expect("all categories present") += 1;
        per_topic.entry(topic).or_insert([0; 9])[c.index()] += 1;
    }
    let total = cats.len().max(1) as f64;
    let shares = counts.iter().map(|(c, n)| (*c, *n as f64 / total)).collect();
    let mut leaders = BTreeMap::new();
    let mut topics_led: BTreeMap<QuestionCategory, usize> = BTreeMap::new();
    for (topic, row) in per_topic {
        // first maximum in canonical order
        let best = (0..9).fold(0, |b, k| if row[k] > row[b] { k } else { b });
        let c = QuestionCategory::ALL[best];
        leaders.insert(topic, c);
        *topics_led.entry(c).or_default() += 1;
    }
    Ok(CategoryDistribution {
        counts,
        shares,
        leaders,
        topics_led,
    })
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PositionStats {
    /// Relevant-turn position → count.
    pub p_rt: BTreeMap<u32, usize>,
    /// `current − relevant` → count.
    pub delta_p: BTreeMap<u32, usize>,
    /// Non-first turns with no relevant turn (position 0).
    pub self_contained: usize,
    /// Current turn → relevant positions, with 0 for self-contained turns.
    pub per_turn: BTreeMap<u32, Vec<u32>>,
    /// Labeled non-first turns.
    pub labeled_turns: usize,
}

impl PositionStats {
    pub fn pairs(&self) -> usize {
        self.p_rt.values().sum()
    }

    /// Share of labeled non-first turns with a relevant turn at `pos`.
    pub fn turn_share_with_position(&self, labels: &[ConsensusLabel], pos: u32) -> f64 {
        let eligible: Vec<_> = labels.iter().filter(|l| l.turn > 1).collect();
        if eligible.is_empty() {
            return 0.0;
        }
        eligible.iter().filter(|l| l.relevant_turns.contains(&pos)).count() as f64 / eligible.len() as f64
    }

    /// Share of labeled non-first turns with a relevant turn exactly `d`
    /// positions back.
    pub fn turn_share_with_distance(&self, labels: &[ConsensusLabel], d: u32) -> f64 {
        let eligible: Vec<_> = labels.iter().filter(|l| l.turn > 1).collect();
        if eligible.is_empty() {
            return 0.0;
        }
        eligible
            .iter()
            .filter(|l| l.turn > d && l.relevant_turns.contains(&(l.turn - d)))
            .count() as f64
            / eligible.len() as f64
    }

    /// Box-plot statistics of relevant positions per current turn.
    pub fn quartiles(&self) -> BTreeMap<u32, FiveNumber> {
        self.per_turn
            .iter()
            .filter_map(|(t, v)| {
                let v: Vec<f64> = v.iter().map(|&x| x as f64).collect();
                FiveNumber::of(&v).map(|f| (*t, f))
            })
            .collect()
    }
}

/// Position histograms. Only labels for turns present in `topics` count;
/// with no topics given every label counts.
pub fn position_stats(labels: &[ConsensusLabel], topics: &[Topic]) -> PositionStats {
    let known: std::collections::BTreeSet<TurnKey> = topics
        .iter()
        .flat_map(|t| t.turns.iter().map(move |u| (t.number, u.number)))
        .collect();
    let mut s = PositionStats::default();
    for l in labels {
        if l.turn <= 1 || (!known.is_empty() && !known.contains(&l.key())) {
            continue;
        }
        s.labeled_turns += 1;
        let entry = s.per_turn.entry(l.turn).or_default();
        if l.relevant_turns.is_empty() {
            s.self_contained += 1;
            entry.push(0);
        }
        for &r in &l.relevant_turns {
            *s.p_rt.entry(r).or_default() += 1;
            *s.delta_p.entry(l.turn - r).or_default() += 1;
            entry.push(r);
        }
    }
    s
}

pub const START: &str = "START";
pub const END: &str = "END";

/// First-order transitions between question categories, bracketed by START
/// and END states.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransitionModel {
    /// START, the nine categories in canonical order, END.
    pub states: Vec<String>,
    pub counts: Vec<Vec<u64>>,
    pub matrix: Vec<Vec<f64>>,
    /// States without outgoing observations (all-zero rows).
    pub empty_rows: Vec<String>,
}

impl TransitionModel {
    fn state(&self, name: &str) -> Option<usize> {
        self.states.iter().position(|s| s == name)
    }

    pub fn prob(&self, from: &str, to: &str) -> f64 {
        match (self.state(from), self.state(to)) {
            (Some(a), Some(b)) => self.matrix[a][b],
            _ => 0.0,
        }
    }

    /// Highest-probability successor; ties go to the earlier state.
    pub fn most_likely_successor(&self, from: &str) -> Option<&str> {
        let row = &self.matrix[self.state(from)?];
        let (k, p) = row
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |b, (k, &p)| if p > b.1 { (k, p) } else { b });
        (p > 0.0).then(|| self.states[k].as_str())
    }
}

pub fn markov(topics: &[Topic]) -> Result<TransitionModel> {
    let mut states = vec![START.to_string()];
    states.extend(QuestionCategory::ALL.iter().map(|c| c.name().to_string()));
    states.push(END.to_string());
    let n = states.len();
    let mut counts = vec![vec![0u64; n]; n];
    for t in topics {
        let mut prev = 0;
        for u in &t.turns {
            let c = categorize(&u.raw_utterance)?.index() + 1;
            counts[prev][c] += 1;
            prev = c;
        }
        counts[prev][n - 1] += 1;
    }
    let mut empty_rows = Vec::new();
    let matrix = counts
        .iter()
        .enumerate()
        .map(|(k, row)| {
            let total: u64 = row.iter().sum();
            if total == 0 {
                empty_rows.push(states[k].clone());
                vec![0.0; n]
            } else {
                row.iter().map(|&c| c as f64 / total as f64).collect()
            }
        })
        .collect();
    Ok(TransitionModel {
        states,
        counts,
        matrix,
        empty_rows,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GroupMean {
    pub mean: f64,
    pub n: usize,
}

fn group_means<K: Ord + Copy>(items: impl Iterator<Item = (K, f64)>) -> BTreeMap<K, GroupMean> {
    let mut acc: BTreeMap<K, (f64, usize)> = BTreeMap::new();
    for (k, v) in items {
        let e = acc.entry(k).or_default();
        e.0 += v;
        e.1 += 1;
    }
    acc.into_iter()
        .map(|(k, (s, n))| (k, GroupMean { mean: s / n as f64, n }))
        .collect()
}

/// Mean of `metric` per turn number. Query ids are `topic_turn`.
pub fn per_turn_performance(per_query: &BTreeMap<String, MetricValues>, metric: Metric) -> Result<BTreeMap<u32, GroupMean>> {
    let items = per_query
        .iter()
        .map(|(qid, v)| Ok((parse_qid(qid)?.1, v.get(metric))))
        .collect::<Result<Vec<_>>>()?;
    Ok(group_means(items.into_iter()))
}

/// Mean of `metric` per question category of the query's turn. Queries
/// whose turn has no category are skipped.
pub fn per_category_performance(
    per_query: &BTreeMap<String, MetricValues>,
    categories: &BTreeMap<TurnKey, QuestionCategory>,
    metric: Metric,
) -> Result<BTreeMap<QuestionCategory, GroupMean>> {
    let mut items = Vec::new();
    for (qid, v) in per_query {
        if let Some(c) = categories.get(&parse_qid(qid)?) {
            items.push((*c, v.get(metric)));
        }
    }
    Ok(group_means(items.into_iter()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::conversation::LabelSource;

    #[test]
    fn two_turn_topic() {
        let s = basic_stats(&[Topic::new(1, &["What is a goat?", "Why?"])], None);
        assert_eq!(s.turns_per_topic, MeanSd { mean: 2.0, sd: 0.0 });
        assert_eq!(s.median_turns, 2.0);
        assert_eq!(s.terms_per_turn.mean, 2.5);
    }

    #[test]
    fn leaders_and_ties() {
        let topics = vec![
            Topic::new(1, &["What is x?", "What is y?"]),
            Topic::new(2, &["How do I x?", "What is y?"]),
        ];
        let d = category_distribution(&topics).unwrap();
        assert_eq!(d.leaders[&1], QuestionCategory::What);
        assert_eq!(d.leaders[&2], QuestionCategory::What);
        assert!((d.shares.values().sum::<f64>() - 1.0).abs() < 1e-12);
        assert_eq!(d.counts[&QuestionCategory::How], 1);
    }

    #[test]
    fn positions() {
        let labels = vec![
            ConsensusLabel::new(1, 5, [1, 4], LabelSource::Agreement).unwrap(),
            ConsensusLabel::new(1, 3, [], LabelSource::Agreement).unwrap(),
            ConsensusLabel::new(1, 1, [], LabelSource::Agreement).unwrap(),
        ];
        let s = position_stats(&labels, &[]);
        assert_eq!(s.p_rt, BTreeMap::from([(1, 1), (4, 1)]));
        assert_eq!(s.delta_p, BTreeMap::from([(4, 1), (1, 1)]));
        assert_eq!(s.self_contained, 1);
        assert_eq!(s.pairs(), 2);
        assert_eq!(s.labeled_turns, 2);
        assert_eq!(s.per_turn[&5], vec![1, 4]);
        assert_eq!(s.quartiles()[&5].median, 2.5);
        assert_eq!(s.turn_share_with_position(&labels, 1), 0.5);
        assert_eq!(s.turn_share_with_distance(&labels, 1), 0.5);
    }

    #[test]
    fn single_path_markov() {
        let m = markov(&[Topic::new(1, &["What is x?", "Why is x?"])]).unwrap();
        assert_eq!(m.prob(START, "What"), 1.0);
        assert_eq!(m.prob("What", "Why"), 1.0);
        assert_eq!(m.prob("Why", END), 1.0);
        assert!(m.empty_rows.contains(&END.to_string()));
        for row in &m.matrix {
            let s: f64 = row.iter().sum();
            assert!(s == 0.0 || (s - 1.0).abs() < 1e-9);
        }
        assert!(m.matrix.iter().all(|r| r[0] == 0.0));
        assert_eq!(m.most_likely_successor("What"), Some("Why"));
    }

    #[test]
    fn grouped_performance() {
        let mut pq = BTreeMap::new();
        let v = |x: f64| {
            let mut m = MetricValues::default();
            m.set(Metric::Ndcg20, x);
            m
        };
        pq.insert("1_1".to_string(), v(0.2));
        pq.insert("1_2".to_string(), v(0.4));
        pq.insert("2_2".to_string(), v(0.8));
        let g = per_turn_performance(&pq, Metric::Ndcg20).unwrap();
        assert_eq!(g[&1].mean, 0.2);
        assert!((g[&2].mean - 0.6).abs() < 1e-12);
        let cats = BTreeMap::from([
            ((1, 1), QuestionCategory::What),
            ((1, 2), QuestionCategory::How),
            ((2, 2), QuestionCategory::How),
        ]);
        let c = per_category_performance(&pq, &cats, Metric::Ndcg20).unwrap();
        assert_eq!(c[&QuestionCategory::What].mean, 0.2);
        assert!((c[&QuestionCategory::How].mean - 0.6).abs() < 1e-12);
    }
}
