//! Runs the configured experiment end to end from a TOML file: predictor
//! training, every reformulation strategy × scorer, and the comparison table.
//!
//!   cargo run --example experiment -- data/fixtures/config.toml

use std::path::PathBuf;

use convrel::interface::pipeline::{load_qrels, load_topics, open_index, require_labels, run_predictor, table4};
use convrel::interface::ExperimentConfig;

fn main() -> convrel::Result<()> {
    let path = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data/fixtures/config.toml"));
    let cfg = ExperimentConfig::load(Some(&path))?;
    cfg.validate()?;

    let topics = load_topics(&cfg)?;
    let labels = require_labels(&cfg)?;
    let pred = run_predictor(&cfg, &topics, Some(&labels), cfg.predictor.target)?;
    println!("{} predictor, threshold {:?}", pred.name, pred.threshold);

    let idx = open_index(&cfg)?;
    let qrels = load_qrels(&cfg)?;
    let (table, runs) = table4(&cfg, &topics, Some(&labels), &idx, &qrels)?;
    println!("{} runs\n{}", runs.len(), table.render_text());
    Ok(())
}
