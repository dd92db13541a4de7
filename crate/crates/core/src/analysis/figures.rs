//! Tabular data behind each figure, written as JSON and CSV for external
//! plotting.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{json, Value};

use super::{category_distribution, markov, per_category_performance, per_turn_performance, position_stats, turn_categories};
use crate::conversation::{ConsensusLabel, Topic};
use crate::error::{Error, Result};
use crate::evalir::{Metric, MetricReport};
use crate::textproc::{pronoun_stats, top_trigrams};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Figure {
    /// File stem, e.g. `fig4`.
    pub name: String,
    pub title: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Value>>,
    /// Extra scalars that do not fit the table.
    #[serde(skip_serializing_if = "BTreeMap::is_empty")]
    pub notes: BTreeMap<String, Value>,
}

impl Figure {
    fn new(name: &str, title: &str, columns: &[&str]) -> Self {
        Figure {
            name: name.into(),
            title: title.into(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
            notes: BTreeMap::new(),
        }
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.columns)?;
        for r in &self.rows {
            w.write_record(r.iter().map(|v| match v {
                Value::String(s) => s.clone(),
                other => other.to_string(),
            }))?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Validation(e.to_string()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }
}

pub struct PlotInputs<'a> {
    pub topics: &'a [Topic],
    pub labels: Option<&'a [ConsensusLabel]>,
    /// Per-strategy evaluation reports for the breakdown figures.
    pub performance: Option<&'a BTreeMap<String, MetricReport>>,
    pub metric: Metric,
}

/// Builds every figure the inputs allow: category figures always, label
/// figures with labels, breakdowns with performance reports.
pub fn plot_data(inputs: &PlotInputs<'_>) -> Result<Vec<Figure>> {
    let topics = inputs.topics;
    let mut out = Vec::new();

    let dist = category_distribution(topics)?;
    let mut f = Figure::new("fig2", "Question category distribution", &["category", "count", "share", "topics_led"]);
    for (c, n) in &dist.counts {
        f.rows.push(vec![
            json!(c.name()),
            json!(n),
            json!(dist.shares[c]),
            json!(dist.topics_led.get(c).copied().unwrap_or(0)),
        ]);
    }
    out.push(f);

    let utterances: Vec<&str> = topics
        .iter()
        .flat_map(|t| t.turns.iter().map(|u| u.raw_utterance.as_str()))
        .collect();
    let mut f = Figure::new("fig3", "Most frequent leading trigrams", &["trigram", "share"]);
    let tri = top_trigrams(&utterances, 10)?;
    for (g, s) in &tri.top {
        f.rows.push(vec![json!(g), json!(s)]);
    }
    let ps = pronoun_stats(&utterances);
    f.notes.insert("share_with_pronoun".into(), json!(ps.share_with_pronoun));
    f.notes.insert("share_pronoun_third_token".into(), json!(ps.share_third_position));
    f.notes.insert("utterances_too_short".into(), json!(tri.skipped));
    out.push(f);

    if let Some(labels) = inputs.labels {
        let pos = position_stats(labels, topics);
        let mut f = Figure::new("fig4", "Relevant turn position", &["position", "count", "turn_share"]);
        f.rows.push(vec![json!(0), json!(pos.self_contained), json!(pos.self_contained as f64 / pos.labeled_turns.max(1) as f64)]);
        for (p, n) in &pos.p_rt {
            f.rows.push(vec![json!(p), json!(n), json!(pos.turn_share_with_position(labels, *p))]);
        }
        out.push(f);

        let mut f = Figure::new("fig5", "Distance between current and relevant turn", &["delta", "count", "turn_share"]);
        for (d, n) in &pos.delta_p {
            f.rows.push(vec![json!(d), json!(n), json!(pos.turn_share_with_distance(labels, *d))]);
        }
        out.push(f);

        let mut f = Figure::new("fig6", "Relevant positions per current turn", &["turn", "min", "q1", "median", "q3", "max", "n"]);
        for (t, q) in pos.quartiles() {
            f.rows.push(vec![
                json!(t),
                json!(q.min),
                json!(q.q1),
                json!(q.median),
                json!(q.q3),
                json!(q.max),
                json!(pos.per_turn[&t].len()),
            ]);
        }
        out.push(f);
    }

    let m = markov(topics)?;
    let mut cols = vec!["from"];
    cols.extend(m.states.iter().map(String::as_str));
    let mut f = Figure::new("fig7", "Category transition probabilities", &cols);
    for (k, row) in m.matrix.iter().enumerate() {
        let mut r = vec![json!(m.states[k])];
        r.extend(row.iter().map(|p| json!(p)));
        f.rows.push(r);
    }
    f.notes.insert("empty_rows".into(), json!(m.empty_rows));
    out.push(f);

    if let Some(perf) = inputs.performance {
        let cats = turn_categories(topics)?;
        let mut turn = Figure::new("fig8", &format!("{} by turn number", inputs.metric), &["strategy", "turn", "mean", "n"]);
        let mut cat = Figure::new("fig9", &format!("{} by question category", inputs.metric), &["strategy", "category", "mean", "n"]);
        for (name, report) in perf {
            for (t, g) in per_turn_performance(&report.per_query, inputs.metric)? {
                turn.rows.push(vec![json!(name), json!(t), json!(g.mean), json!(g.n)]);
            }
            for (c, g) in per_category_performance(&report.per_query, &cats, inputs.metric)? {
                cat.rows.push(vec![json!(name), json!(c.name()), json!(g.mean), json!(g.n)]);
            }
        }
        out.push(turn);
        out.push(cat);
    }
    Ok(out)
}

/// Writes `<name>.json` and `<name>.csv` per figure into `dir`.
pub fn write_plot_data(dir: impl AsRef<Path>, figures: &[Figure]) -> Result<Vec<PathBuf>> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut written = Vec::new();
    for f in figures {
        let json_path = dir.join(format!("{}.json", f.name));
        fs::write(&json_path, serde_json::to_string_pretty(f)?).map_err(|e| Error::io(&json_path, e))?;
        let csv_path = dir.join(format!("{}.csv", f.name));
        fs::write(&csv_path, f.to_csv()?).map_err(|e| Error::io(&csv_path, e))?;
        written.push(json_path);
        written.push(csv_path);
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::conversation::LabelSource;

    #[test]
    fn figures_by_available_inputs() {
        let topics = vec![Topic::new(1, &["What is throat cancer?", "Is it treatable?", "How is it diagnosed?"])];
        let labels = vec![
            ConsensusLabel::new(1, 2, [1], LabelSource::Agreement).unwrap(),
            ConsensusLabel::new(1, 3, [1, 2], LabelSource::Agreement).unwrap(),
        ];
        let only = plot_data(&PlotInputs { topics: &topics, labels: None, performance: None, metric: Metric::Ndcg20 }).unwrap();
        let names: Vec<&str> = only.iter().map(|f| f.name.as_str()).collect();
        assert_eq!(names, ["fig2", "fig3", "fig7"]);
        let with = plot_data(&PlotInputs { topics: &topics, labels: Some(&labels), performance: None, metric: Metric::Ndcg20 }).unwrap();
        assert_eq!(with.len(), 6);
        let dir = tempfile::tempdir().unwrap();
        let files = write_plot_data(dir.path(), &with).unwrap();
        assert_eq!(files.len(), 12);
        let fig4: Value = serde_json::from_str(&fs::read_to_string(dir.path().join("fig4.json")).unwrap()).unwrap();
        assert_eq!(fig4["rows"][1], json!([1, 2, 1.0]));
        assert!(with[0].to_csv().unwrap().starts_with("category,count,share,topics_led\n"));
    }
}
