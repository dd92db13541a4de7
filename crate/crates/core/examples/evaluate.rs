//! Evaluates retrieval runs for several reformulation strategies against
//! graded judgments and prints the significance-marked comparison table.

use std::collections::BTreeMap;
use std::path::Path;

use convrel::conversation::{load_castur, parse_topics};
use convrel::evalir::{eval_run, paired_ttest, read_qrels, read_run, table4_report, EvalOptions, Metric, Run};
use convrel::reformulate::{batch_reformulate, Strategy};
use convrel::retrieval::{ingest, retrieve, CorpusFormat, InvertedIndex, Model, RetrieveOptions};

fn main() -> convrel::Result<()> {
    let fixtures = Path::new(env!("CARGO_MANIFEST_DIR")).join("data/fixtures");
    let topics = parse_topics(fixtures.join("topics.json"))?;
    let gold = load_castur(fixtures.join("castur.csv"))?;
    let qrels = read_qrels(fixtures.join("qrels.txt"))?;
    let idx = InvertedIndex::build(&ingest(fixtures.join("corpus.tsv"), CorpusFormat::Tsv)?)?;
    let opts = EvalOptions::default();

    // a frozen run with reference metrics alongside it
    let sample = eval_run(&read_run(fixtures.join("sample.run"))?, &qrels, &opts);
    println!("sample.run MAP {:.4}  nDCG@5 {:.4}", sample.aggregate.get(Metric::Map), sample.aggregate.get(Metric::Ndcg5));

    let mut runs = BTreeMap::new();
    for s in [Strategy::Orig, Strategy::FU, Strategy::AU, Strategy::Oracle] {
        let mut run = Run::new(s.name());
        for q in batch_reformulate(&topics, s, None, Some(&gold))? {
            let r = retrieve(&q.tokens, Model::Bm25, 100, &idx, &RetrieveOptions::default())?;
            run.insert(format!("{}_{}", q.topic, q.turn), r.ranked);
        }
        runs.insert((Model::Bm25, s), run);
    }
    let table = table4_report(&runs, &qrels, &opts)?;
    println!("{}", table.render_text());

    let orig = eval_run(&runs[&(Model::Bm25, Strategy::Orig)], &qrels, &opts);
    let oracle = eval_run(&runs[&(Model::Bm25, Strategy::Oracle)], &qrels, &opts);
    let t = paired_ttest(&oracle.values(Metric::Map), &orig.values(Metric::Map))?;
    println!("Oracle vs Orig on MAP: t = {:.3}, p = {:.4}", t.t, t.p);
    Ok(())
}
