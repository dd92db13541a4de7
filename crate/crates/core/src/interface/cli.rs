//! Command-line front end. The `convrel` binary only parses arguments and
//! calls [`run`].

use std::collections::BTreeMap;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use super::config::ExperimentConfig;
use super::pipeline::{
    build_index, labels_for, load_labels, load_qrels, load_topics, open_index, queries_for, require_labels,
    run_predictor, run_queries, run_tag, table3, table3_csv, table4, table5, table5_csv, topic_split,
};
use super::server::{self, AppState};
use super::store::AnnotationStore;
use crate::analysis::{basic_stats, category_distribution, markov, plot_data, position_stats, write_plot_data, PlotInputs};
use crate::error::{Error, Result};
use crate::evalir::{eval_run, read_run, write_run, Gain, Metric, MetricReport};
use crate::reformulate::{read_queries, write_queries, Query, Strategy};
use crate::relevance::{classify_eval, PredictionSet, Target};
use crate::retrieval::{persist, Model};

#[derive(Debug, Parser)]
#[command(name = "convrel", version, about = "Conversational turn relevance, query reformulation and retrieval evaluation")]
pub struct Cli {
    /// TOML experiment configuration.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Reformulation strategy; repeat or comma-separate for several.
    #[arg(long, global = true, value_delimiter = ',')]
    pub strategy: Vec<Strategy>,
    /// Retrieval scorer (bm25, ql, dfr); repeat or comma-separate.
    #[arg(long, global = true, value_delimiter = ',')]
    pub scorer: Vec<Model>,
    /// Output file or directory, depending on the command.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Directory for per-figure data files.
    #[arg(long, global = true)]
    pub plot_data: Option<PathBuf>,
    /// Score every passage under QL, not only those matching a query term.
    #[arg(long, global = true)]
    pub exhaustive_ql: bool,
    #[command(flatten)]
    pub paths: PathArgs,
    #[command(subcommand)]
    pub command: Command,
}

/// Input overrides for the `[paths]` section.
#[derive(Debug, Default, Args)]
pub struct PathArgs {
    #[arg(long, global = true, value_delimiter = ',')]
    pub topics: Vec<PathBuf>,
    #[arg(long, global = true)]
    pub castur: Option<PathBuf>,
    #[arg(long, global = true)]
    pub corpus: Option<PathBuf>,
    #[arg(long, global = true)]
    pub qrels: Option<PathBuf>,
    #[arg(long, global = true)]
    pub embeddings: Option<PathBuf>,
    #[arg(long, global = true)]
    pub index: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build and persist the passage index.
    Index,
    /// Conversation statistics, categories, positions and transitions.
    Analyze,
    /// Predict relevant prior turns for every turn.
    Predict {
        /// Metric the decision threshold is tuned for (P, R or F1).
        #[arg(long)]
        target: Option<Target>,
    },
    /// Write the query of every turn under the chosen strategies.
    Reformulate {
        /// Predictions CSV for PrU; the configured predictor runs otherwise.
        #[arg(long)]
        predictions: Option<PathBuf>,
    },
    /// Produce TREC run files.
    Retrieve {
        /// Queries exported by `reformulate`, used instead of rebuilding them.
        #[arg(long)]
        queries: Option<PathBuf>,
        #[arg(long)]
        predictions: Option<PathBuf>,
        #[arg(long)]
        depth: Option<usize>,
    },
    /// Score run files against qrels.
    Evaluate {
        #[arg(long = "run", required = true)]
        runs: Vec<PathBuf>,
        /// Linear instead of exponential nDCG gain.
        #[arg(long)]
        linear_gain: bool,
    },
    /// Compose the classification, retrieval and metric-oriented tables.
    Report {
        #[arg(long, num_args = 1.., default_values_t = [3u8, 4, 5])]
        tables: Vec<u8>,
    },
    /// Run the annotation service.
    Serve {
        #[arg(long)]
        addr: Option<String>,
        /// Annotation log (JSON lines).
        #[arg(long)]
        store: Option<PathBuf>,
        #[arg(long)]
        annotators: Option<usize>,
    },
}

impl Cli {
    /// The configuration file plus environment and command-line overrides.
    pub fn config(&self) -> Result<ExperimentConfig> {
        let mut cfg = ExperimentConfig::load(self.config.as_deref())?;
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if !self.strategy.is_empty() {
            cfg.strategies = self.strategy.clone();
        }
        if !self.scorer.is_empty() {
            cfg.scorers = self.scorer.clone();
        }
        if self.exhaustive_ql {
            cfg.retrieval.exhaustive_ql = true;
        }
        let p = &self.paths;
        if !p.topics.is_empty() {
            cfg.paths.topics = p.topics.clone();
        }
        for (slot, v) in [
            (&mut cfg.paths.castur, &p.castur),
            (&mut cfg.paths.corpus, &p.corpus),
            (&mut cfg.paths.qrels, &p.qrels),
            (&mut cfg.paths.embeddings, &p.embeddings),
            (&mut cfg.paths.index, &p.index),
        ] {
            if v.is_some() {
                slot.clone_from(v);
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn emit(out: Option<&Path>, content: &str) -> Result<()> {
    match out {
        Some(p) => {
            if let Some(dir) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
                fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
            }
            fs::write(p, content).map_err(|e| Error::io(p, e))
        }
        None => std::io::stdout()
            .write_all(content.as_bytes())
            .map_err(|e| Error::io("<stdout>", e)),
    }
}

fn read_predictions(path: &Path) -> Result<PredictionSet> {
    let f = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    PredictionSet::read_csv(f, &path.display().to_string())
}

/// Executes one command.
pub fn run(cli: Cli) -> Result<()> {
    let cfg = cli.config()?;
    let out = cli.out.as_deref();
    match &cli.command {
        Command::Index => {
            let idx = build_index(&cfg)?;
            let path = out
                .map(Path::to_path_buf)
                .or_else(|| cfg.paths.index.clone())
                .unwrap_or_else(|| PathBuf::from("index.bin"));
            persist(&idx, &path)?;
            eprintln!(
                "indexed {} passages, {} terms, avgdl {:.2} -> {}",
                idx.num_docs(),
                idx.num_terms(),
                idx.avgdl(),
                path.display()
            );
        }
        Command::Analyze => analyze(&cli, &cfg)?,
        Command::Predict { target } => {
            let topics = load_topics(&cfg)?;
            let labels = load_labels(&cfg)?;
            let target = target.unwrap_or(cfg.predictor.target);
            let pred = run_predictor(&cfg, &topics, labels.as_deref(), target)?;
            if let Some(t) = pred.threshold {
                eprintln!("{}: threshold {t:.2} chosen for {target} on dev", pred.name);
            }
            if let Some(labels) = &labels {
                let test = topic_split(&cfg, &topics)?.test;
                let gold = labels_for(labels, &test);
                if !gold.is_empty() {
                    let r = classify_eval(&pred.predictions.restrict(&test), &gold, None)?;
                    eprintln!("test P {:.4} R {:.4} F1 {:.4}", r.precision, r.recall, r.f1);
                }
            }
            let mut buf = Vec::new();
            pred.predictions.write_csv(&mut buf)?;
            emit(out, &String::from_utf8_lossy(&buf))?;
        }
        Command::Reformulate { predictions } => {
            let topics = load_topics(&cfg)?;
            let labels = load_labels(&cfg)?;
            let mut queries = Vec::new();
            for &s in &cfg.strategies {
                let preds = pru_predictions(&cfg, s, predictions.as_deref(), &topics, labels.as_deref())?;
                queries.extend(queries_for(&topics, s, preds.as_ref(), labels.as_deref())?);
            }
            let mut buf = Vec::new();
            write_queries(&queries, &mut buf)?;
            emit(out, &String::from_utf8_lossy(&buf))?;
        }
        Command::Retrieve { queries, predictions, depth } => {
            let mut cfg = cfg.clone();
            if let Some(d) = depth {
                cfg.retrieval.depth = *d;
            }
            retrieve_cmd(&cfg, out, queries.as_deref(), predictions.as_deref())?;
        }
        Command::Evaluate { runs, linear_gain } => {
            let mut opts = cfg.metrics;
            if *linear_gain {
                opts.gain = Gain::Linear;
            }
            let qrels = load_qrels(&cfg)?;
            let mut csv = String::from("run,qid");
            for m in Metric::ALL {
                csv.push(',');
                csv.push_str(m.name());
            }
            csv.push('\n');
            for path in runs {
                let run = read_run(path)?;
                let report = eval_run(&run, &qrels, &opts);
                let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
                csv.push_str(&report_rows(&name, &report));
                let summary: Vec<String> = Metric::ALL
                    .iter()
                    .map(|m| format!("{} {:.4}", m.name(), report.aggregate.get(*m)))
                    .collect();
                eprintln!("{name}: {}", summary.join("  "));
                if !report.missing.is_empty() {
                    eprintln!("{name}: {} judged queries had no ranking (scored 0)", report.missing.len());
                }
            }
            emit(out, &csv)?;
        }
        Command::Report { tables } => report(&cfg, out, tables)?,
        Command::Serve { addr, store, annotators } => {
            let topics = load_topics(&cfg)?;
            let annotators = annotators.unwrap_or(cfg.serve.annotators);
            let store = match store.as_ref().or(cfg.paths.annotations.as_ref()) {
                Some(p) => AnnotationStore::open(p, annotators)?,
                None => {
                    log::warn!("no annotation log configured; annotations will not persist");
                    AnnotationStore::in_memory(annotators)
                }
            };
            let addr = addr.clone().unwrap_or_else(|| cfg.serve.addr.clone());
            let rt = tokio::runtime::Builder::new_multi_thread()
                .enable_all()
                .build()
                .map_err(|e| Error::io("<runtime>", e))?;
            rt.block_on(server::serve(&addr, AppState::new(topics, store)))?;
        }
    }
    Ok(())
}

/// Per-query rows followed by an `all` row, metrics to six decimals.
pub fn report_rows(name: &str, report: &MetricReport) -> String {
    let mut out = String::new();
    let row = |qid: &str, v: &crate::evalir::MetricValues| {
        let mut s = format!("{name},{qid}");
        for m in Metric::ALL {
            s.push_str(&format!(",{:.6}", v.get(m)));
        }
        s.push('\n');
        s
    };
    for (qid, v) in &report.per_query {
        out.push_str(&row(qid, v));
    }
    out.push_str(&row("all", &report.aggregate));
    out
}

fn pru_predictions(
    cfg: &ExperimentConfig,
    s: Strategy,
    file: Option<&Path>,
    topics: &[crate::conversation::Topic],
    labels: Option<&[crate::conversation::ConsensusLabel]>,
) -> Result<Option<PredictionSet>> {
    if s != Strategy::PrU {
        return Ok(None);
    }
    Ok(Some(match file {
        Some(p) => read_predictions(p)?,
        None => run_predictor(cfg, topics, labels, cfg.predictor.target)?.predictions,
    }))
}

fn retrieve_cmd(cfg: &ExperimentConfig, out: Option<&Path>, queries: Option<&Path>, predictions: Option<&Path>) -> Result<()> {
    let idx = open_index(cfg)?;
    let mut jobs: Vec<(Strategy, Vec<Query>)> = Vec::new();
    if let Some(path) = queries {
        let f = fs::File::open(path).map_err(|e| Error::io(path, e))?;
        let all = read_queries(f, &path.display().to_string())?;
        for &s in &cfg.strategies {
            let qs: Vec<Query> = all.iter().filter(|q| q.strategy == s).cloned().collect();
            if !qs.is_empty() {
                jobs.push((s, qs));
            }
        }
    } else {
        let topics = load_topics(cfg)?;
        let labels = load_labels(cfg)?;
        for &s in &cfg.strategies {
            let preds = pru_predictions(cfg, s, predictions, &topics, labels.as_deref())?;
            jobs.push((s, queries_for(&topics, s, preds.as_ref(), labels.as_deref())?));
        }
    }
    let combos = jobs.len() * cfg.scorers.len();
    if combos == 0 {
        return Err(Error::InvalidInput("no queries for the selected strategies".into()));
    }
    for (s, qs) in &jobs {
        for &m in &cfg.scorers {
            let tag = run_tag(*s, m);
            let run = run_queries(&idx, qs, m, cfg, &tag)?;
            let path = match out {
                Some(p) if combos == 1 => p.to_path_buf(),
                Some(dir) => dir.join(format!("{tag}.run")),
                None => PathBuf::from(format!("{tag}.run")),
            };
            if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
                fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
            }
            write_run(&run, &path)?;
            eprintln!("{tag}: {} queries -> {}", run.len(), path.display());
        }
    }
    Ok(())
}

fn analyze(cli: &Cli, cfg: &ExperimentConfig) -> Result<()> {
    let topics = load_topics(cfg)?;
    let labels = load_labels(cfg)?;
    let mut summary = serde_json::Map::new();
    summary.insert("basic".into(), serde_json::to_value(basic_stats(&topics, labels.as_deref()))?);
    summary.insert("categories".into(), serde_json::to_value(category_distribution(&topics)?)?);
    if let Some(l) = &labels {
        let pos = position_stats(l, &topics);
        summary.insert(
            "p_rt1_turn_share".into(),
            pos.turn_share_with_position(l, 1).into(),
        );
        summary.insert(
            "delta1_turn_share".into(),
            pos.turn_share_with_distance(l, 1).into(),
        );
        summary.insert("positions".into(), serde_json::to_value(pos)?);
    }
    let m = markov(&topics)?;
    summary.insert(
        "most_likely_after_what".into(),
        m.most_likely_successor("What").into(),
    );
    summary.insert("transitions".into(), serde_json::to_value(&m)?);
    emit(cli.out.as_deref(), &(serde_json::to_string_pretty(&summary)? + "\n"))?;

    if let Some(dir) = &cli.plot_data {
        // per-turn and per-category breakdowns need retrieval runs
        let perf = if cfg.paths.qrels.is_some() && (cfg.paths.corpus.is_some() || cfg.paths.index.is_some()) {
            let mut c = cfg.clone();
            c.scorers = vec![if cfg.scorers.contains(&Model::Ql) { Model::Ql } else { cfg.scorers[0] }];
            let idx = open_index(&c)?;
            let (t4, _) = table4(&c, &topics, labels.as_deref(), &idx, &load_qrels(&c)?)?;
            let by_strategy: BTreeMap<String, MetricReport> =
                t4.reports.into_iter().map(|((_, s), r)| (s.to_string(), r)).collect();
            Some(by_strategy)
        } else {
            None
        };
        let figs = plot_data(&PlotInputs {
            topics: &topics,
            labels: labels.as_deref(),
            performance: perf.as_ref(),
            metric: Metric::Ndcg20,
        })?;
        let files = write_plot_data(dir, &figs)?;
        eprintln!("wrote {} figure files to {}", files.len(), dir.display());
    }
    Ok(())
}

fn report(cfg: &ExperimentConfig, out: Option<&Path>, tables: &[u8]) -> Result<()> {
    let dir = out.map(Path::to_path_buf).unwrap_or_else(|| PathBuf::from("report"));
    fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    let write = |name: &str, content: &str| emit(Some(&dir.join(name)), content);
    let topics = load_topics(cfg)?;
    for t in tables {
        match t {
            3 => {
                let labels = require_labels(cfg)?;
                write("table3.csv", &table3_csv(&table3(cfg, &topics, &labels)?))?;
            }
            4 => {
                let labels = load_labels(cfg)?;
                let idx = open_index(cfg)?;
                let (t4, _) = table4(cfg, &topics, labels.as_deref(), &idx, &load_qrels(cfg)?)?;
                write("table4.csv", &t4.render_csv())?;
                write("table4.txt", &t4.render_text())?;
                let mut rel = String::from("model,metric,strategy,baseline,relative_change\n");
                for (model, m, a, b, r) in t4.relative_improvements() {
                    rel.push_str(&format!("{},{},{a},{b},{r:.6}\n", model.name(), m.name()));
                }
                write("table4_relative.csv", &rel)?;
            }
            5 => {
                let labels = require_labels(cfg)?;
                let idx = open_index(cfg)?;
                write("table5.csv", &table5_csv(&table5(cfg, &topics, &labels, &idx, &load_qrels(cfg)?)?))?;
            }
            other => return Err(Error::InvalidInput(format!("no table {other}; choose from 3, 4 and 5"))),
        }
        eprintln!("table {t} -> {}", dir.display());
    }
    Ok(())
}
