//! TREC-style retrieval evaluation, significance testing and reports.

mod metrics;
mod table4;
mod trec;
mod ttest;

pub use metrics::{eval_run, query_metrics, EvalOptions, Gain, Metric, MetricReport, MetricValues};
pub use table4::{table4_report, Cell, Table4, ALPHA, MARKED};
pub use trec::{read_qrels, read_run, write_run, Qrels, Run};
pub use ttest::{paired_ttest, SignificanceMatrix, TTest};
