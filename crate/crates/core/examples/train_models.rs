//! Trains the learned turn-relevance models on the bundled conversations
//! and tunes a decision threshold on dev for each target metric.

use std::path::Path;

use convrel::conversation::{load_castur, parse_topics, split, SplitScheme};
use convrel::relevance::{
    candidate_pairs, classify_eval, cur_train, fit_pipeline, metric_oriented_select, mlp_train, pairs_to_predictions,
    threshold_sweep, AweEncoder, CurConfig, CurNetwork, Featurizer, MlpConfig, PairScore, Target,
};
use convrel::textproc::load_embeddings;

fn main() -> convrel::Result<()> {
    let fixtures = Path::new(env!("CARGO_MANIFEST_DIR")).join("data/fixtures");
    let topics = parse_topics(fixtures.join("topics.json"))?;
    let gold = load_castur(fixtures.join("castur.csv"))?;
    let sp = split(
        &topics,
        &SplitScheme::Paper {
            max_test_topic: 30,
            dev_fraction: 0.3,
        },
        42,
    )?;
    let numbers = |ts: &[convrel::conversation::Topic]| ts.iter().map(|t| t.number).collect::<Vec<_>>();
    println!("train {:?}  dev {:?}  test {:?}", numbers(&sp.train), numbers(&sp.dev), numbers(&sp.test));

    let train = candidate_pairs(&sp.train, Some(&gold));
    let all = candidate_pairs(&topics, None);

    let mlp = fit_pipeline(&train, Featurizer::tfidf_over(&topics), true, |d| {
        mlp_train(d, &MlpConfig { epochs: 200, ..Default::default() })
    })?;
    let emb = load_embeddings(fixtures.join("embeddings.txt"))?;
    let cfg = CurConfig {
        epochs: 300,
        learning_rate: 1e-2,
        ..Default::default()
    };
    let cur = cur_train(&train, CurNetwork::new(Box::new(AweEncoder(emb)), &cfg)?, &cfg)?;
    println!(
        "CUR loss {:.4} -> {:.4}",
        cur.loss_curve.first().unwrap(),
        cur.loss_curve.last().unwrap()
    );

    let in_topics = |scores: &[PairScore], ts: &[convrel::conversation::Topic]| -> Vec<PairScore> {
        scores.iter().filter(|s| ts.iter().any(|t| t.number == s.topic)).cloned().collect()
    };
    let thresholds: Vec<f64> = (1..20).map(|k| k as f64 / 20.0).collect();
    let dev_gold: Vec<_> = gold.iter().filter(|l| sp.dev.iter().any(|t| t.number == l.topic)).cloned().collect();
    let test_gold: Vec<_> = gold.iter().filter(|l| sp.test.iter().any(|t| t.number == l.topic)).cloned().collect();

    for (name, scores) in [("MLP", mlp.score_pairs(&all)?), ("CUR", cur.net.score_pairs(&all)?)] {
        for target in [Target::Precision, Target::Recall, Target::F1] {
            let cands = threshold_sweep(name, &sp.dev, &in_topics(&scores, &sp.dev), &thresholds);
            let sel = metric_oriented_select(&cands, &dev_gold, target)?;
            let test = pairs_to_predictions(&sp.test, &in_topics(&scores, &sp.test), sel.threshold);
            let r = classify_eval(&test, &test_gold, None)?;
            println!(
                "{name} tuned for {target:<2}: θ={:.2}  test P {:.3} R {:.3} F1 {:.3}",
                sel.threshold, r.precision, r.recall, r.f1
            );
        }
    }
    Ok(())
}
