//! Strategy × scorer grid with significance superscripts.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::metrics::{eval_run, EvalOptions, Metric, MetricReport, MetricValues};
use super::trec::{Qrels, Run};
use super::ttest::paired_ttest;
use crate::error::{Error, Result};
use crate::reformulate::Strategy;
use crate::retrieval::Model;

pub const ALPHA: f64 = 0.05;

/// Systems that earn a numbered superscript when significantly beaten,
/// numbered from 1.
pub const MARKED: [Strategy; 6] = [
    Strategy::Orig,
    Strategy::FU,
    Strategy::PU,
    Strategy::FPU,
    Strategy::AU,
    Strategy::PrU,
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub model: Model,
    pub strategy: Strategy,
    pub values: MetricValues,
    /// Per metric, the 1-based numbers of [`MARKED`] systems this cell
    /// significantly improves on.
    pub superscripts: [Vec<usize>; 8],
    /// Best non-Oracle value of its scorer and metric.
    pub bold: [bool; 8],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table4 {
    pub cells: Vec<Cell>,
    /// Combinations that had no run.
    pub gaps: Vec<(Model, Strategy)>,
    /// Per-query reports behind the cells.
    #[serde(skip)]
    pub reports: BTreeMap<(Model, Strategy), MetricReport>,
}

/// Builds the grid. Every run is evaluated over the judged queries, so a
/// query a run has no ranking for (e.g. its reformulation was empty after
/// stopping) scores zero rather than being dropped from the comparison.
pub fn table4_report(runs: &BTreeMap<(Model, Strategy), Run>, qrels: &Qrels, opts: &EvalOptions) -> Result<Table4> {
    if runs.is_empty() {
        return Err(Error::InvalidInput("no runs to report".into()));
    }
    let reports: BTreeMap<(Model, Strategy), MetricReport> =
        runs.iter().map(|(k, r)| (*k, eval_run(r, qrels, opts))).collect();
    let mut cells = Vec::new();
    let mut gaps = Vec::new();
    for model in Model::ALL {
        if !reports.keys().any(|k| k.0 == model) {
            continue;
        }
        for strategy in Strategy::ALL {
            let Some(rep) = reports.get(&(model, strategy)) else {
                gaps.push((model, strategy));
                continue;
            };
            let mut superscripts: [Vec<usize>; 8] = Default::default();
            for m in Metric::ALL {
                for (n, other) in MARKED.iter().enumerate() {
                    if *other == strategy {
                        continue;
                    }
                    let Some(orep) = reports.get(&(model, *other)) else {
                        continue;
                    };
                    if rep.aggregate.get(m) <= orep.aggregate.get(m) {
                        continue;
                    }
                    let t = paired_ttest(&rep.values(m), &orep.values(m))?;
                    if t.significant(ALPHA) {
                        superscripts[m.index()].push(n + 1);
                    }
                }
            }
            cells.push(Cell {
                model,
                strategy,
                values: rep.aggregate,
                superscripts,
                bold: [false; 8],
            });
        }
    }
    for model in Model::ALL {
        for m in Metric::ALL {
            let best = cells
                .iter()
                .filter(|c| c.model == model && c.strategy != Strategy::Oracle)
                .map(|c| c.values.get(m))
                .fold(f64::NEG_INFINITY, f64::max);
            for c in cells.iter_mut().filter(|c| c.model == model && c.strategy != Strategy::Oracle) {
                c.bold[m.index()] = c.values.get(m) == best;
            }
        }
    }
    Ok(Table4 { cells, gaps, reports })
}

impl Table4 {
    pub fn cell(&self, model: Model, strategy: Strategy) -> Option<&Cell> {
        self.cells.iter().find(|c| c.model == model && c.strategy == strategy)
    }

    /// Aligned plain-text grid. Bold cells are wrapped in `*`, superscripts
    /// follow a `^`.
    pub fn render_text(&self) -> String {
        let mut rows: Vec<Vec<String>> = Vec::new();
        let mut header = vec!["Model".to_string(), "Strategy".to_string()];
        header.extend(Metric::ALL.iter().map(|m| m.name().to_string()));
        rows.push(header);
        for c in &self.cells {
            let mut row = vec![c.model.name().to_uppercase(), c.strategy.to_string()];
            for m in Metric::ALL {
                let mut s = format!("{:.4}", c.values.get(m));
                let sup = &c.superscripts[m.index()];
                if !sup.is_empty() {
                    s.push('^');
                    sup.iter().for_each(|n| s.push_str(&n.to_string()));
                }
                if c.bold[m.index()] {
                    s = format!("*{s}*");
                }
                row.push(s);
            }
            rows.push(row);
        }
        for (model, strategy) in &self.gaps {
            let mut row = vec![model.name().to_uppercase(), strategy.to_string()];
            row.extend(Metric::ALL.iter().map(|_| "-".to_string()));
            rows.push(row);
        }
        let widths: Vec<usize> = (0..rows[0].len())
            .map(|k| rows.iter().map(|r| r[k].chars().count()).max().unwrap_or(0))
            .collect();
        let mut out = String::new();
        for r in rows {
            let line: Vec<String> = r.iter().zip(&widths).map(|(s, w)| format!("{s:<w$}")).collect();
            let _ = writeln!(out, "{}", line.join("  ").trim_end());
        }
        out
    }

    /// `model,strategy,metric,value,superscripts,bold` rows.
    pub fn render_csv(&self) -> String {
        let mut out = String::from("model,strategy,metric,value,superscripts,bold\n");
        for c in &self.cells {
            for m in Metric::ALL {
                let sup: String = c.superscripts[m.index()].iter().map(|n| n.to_string()).collect();
                let _ = writeln!(
                    out,
                    "{},{},{},{:.6},{},{}",
                    c.model.name(),
                    c.strategy,
                    m.name(),
                    c.values.get(m),
                    sup,
                    c.bold[m.index()]
                );
            }
        }
        out
    }

    /// Relative change `(a − b)/b` of every strategy over every other, per
    /// scorer and metric. Pairs where `b` is zero are skipped.
    pub fn relative_improvements(&self) -> Vec<(Model, Metric, Strategy, Strategy, f64)> {
        let mut out = Vec::new();
        for a in &self.cells {
            for b in self.cells.iter().filter(|b| b.model == a.model && b.strategy != a.strategy) {
                for m in Metric::ALL {
                    let base = b.values.get(m);
                    if base > 0.0 {
                        out.push((a.model, m, a.strategy, b.strategy, (a.values.get(m) - base) / base));
                    }
                }
            }
        }
        out
    }
}
