//! Scores the rule-based relevant-turn predictors against the bundled
//! consensus labels.

use std::path::Path;

use convrel::conversation::{load_castur, parse_topics};
use convrel::relevance::{classify_eval, heuristic_predict, Heuristic};

fn main() -> convrel::Result<()> {
    let fixtures = Path::new(env!("CARGO_MANIFEST_DIR")).join("data/fixtures");
    let topics = parse_topics(fixtures.join("topics.json"))?;
    let gold = load_castur(fixtures.join("castur.csv"))?;

    println!("{:<20} {:>6} {:>6} {:>6}", "predictor", "P", "R", "F1");
    for h in Heuristic::ALL {
        let r = classify_eval(&heuristic_predict(&topics, h, 42), &gold, None)?;
        println!("{:<20} {:>6.3} {:>6.3} {:>6.3}", h.name(), r.precision, r.recall, r.f1);
    }

    let t = &topics[0];
    let preds = heuristic_predict(&topics, Heuristic::FirstPrev, 42);
    println!("\nFirstPrev on topic {}:", t.number);
    for turn in &t.turns {
        println!("  {:>2} {:<45} -> {:?}", turn.number, turn.raw_utterance, preds.get((t.number, turn.number)).unwrap());
    }
    Ok(())
}
