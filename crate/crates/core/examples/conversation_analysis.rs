//! Collection statistics, relevant-turn positions and the question-type
//! transition model for the bundled conversations.

use std::path::Path;

use convrel::analysis::{basic_stats, category_distribution, markov, position_stats};
use convrel::conversation::{load_castur, parse_topics};

fn main() -> convrel::Result<()> {
    let fixtures = Path::new(env!("CARGO_MANIFEST_DIR")).join("data/fixtures");
    let topics = parse_topics(fixtures.join("topics.json"))?;
    let labels = load_castur(fixtures.join("castur.csv"))?;

    let s = basic_stats(&topics, Some(&labels));
    println!(
        "{} conversations, {} turns, {:.2}±{:.2} turns each, {:.2}±{:.2} terms per turn",
        s.conversations, s.turns, s.turns_per_topic.mean, s.turns_per_topic.sd, s.terms_per_turn.mean, s.terms_per_turn.sd
    );

    let pos = position_stats(&labels, &topics);
    println!(
        "turns depending on the first turn: {:.2}; on the previous turn: {:.2}; self-contained: {}",
        pos.turn_share_with_position(&labels, 1),
        pos.turn_share_with_distance(&labels, 1),
        pos.self_contained
    );
    for (turn, q) in pos.quartiles() {
        println!("  turn {turn}: relevant positions median {:.1} (q1 {:.1}, q3 {:.1})", q.median, q.q1, q.q3);
    }

    let dist = category_distribution(&topics)?;
    println!("categories: {:?}", dist.counts);
    let m = markov(&topics)?;
    for from in ["START", "What", "How"] {
        println!("most likely after {from}: {:?} ({:.2})", m.most_likely_successor(from), {
            let to = m.most_likely_successor(from).unwrap_or("END");
            m.prob(from, to)
        });
    }
    Ok(())
}
