//! Shows every query reformulation strategy for one conversation.

use std::path::Path;

use convrel::conversation::{load_castur, parse_topics};
use convrel::reformulate::{reformulate, resolve_pronouns, Strategy};
use convrel::relevance::{heuristic_predict, Heuristic};

fn main() -> convrel::Result<()> {
    let fixtures = Path::new(env!("CARGO_MANIFEST_DIR")).join("data/fixtures");
    let topics = parse_topics(fixtures.join("topics.json"))?;
    let gold = load_castur(fixtures.join("castur.csv"))?;
    let topic = topics.iter().find(|t| t.number == 34).unwrap();
    // stand-in predictions; any PredictionSet works here
    let preds = heuristic_predict(&topics, Heuristic::FirstPrev, 42);

    println!("{}", resolve_pronouns("What form is it in?", "Is there water on the planet?"));
    for turn in [4, 6, 8] {
        println!("\nturn {turn}: {}", topic.utterance(turn).unwrap());
        for s in Strategy::ALL {
            let q = reformulate(topic, turn, s, Some(&preds), Some(&gold))?;
            println!("  {:<7} {:<60} context {:?}", s.name(), q.text(), q.context_turns);
        }
    }
    Ok(())
}
