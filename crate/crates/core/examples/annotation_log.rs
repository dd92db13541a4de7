//! Collects annotations from three annotators, flags a disagreement,
//! settles it by adjudication and exports the consensus labels — without
//! any server.

use std::collections::BTreeSet;

use convrel::conversation::AnnotationRecord;
use convrel::interface::{AnnotationStore, LogEntry};

fn main() -> convrel::Result<()> {
    let mut store = AnnotationStore::in_memory(3);
    let votes: [(u32, &[u32], &str); 6] = [
        (8, &[1], "ann1"),
        (8, &[1], "ann2"),
        (8, &[1, 6], "ann3"),
        (7, &[1], "ann1"),
        (7, &[6], "ann2"),
        (7, &[2], "ann3"),
    ];
    for (turn, rel, who) in votes {
        store.append(LogEntry::Annotation(AnnotationRecord::new(31, turn, rel.iter().copied(), who)))?;
    }
    let a = store.book().agreement((31, 8))?;
    println!("turn 8: {:.1}% agreement, consensus {:?}", 100.0 * a.percentage, a.consensus);
    println!("flagged: {:?}", store.book().flagged());

    // a turn cannot depend on a later one
    let bad = store.append(LogEntry::Annotation(AnnotationRecord::new(31, 5, [7], "ann1")));
    println!("rejected: {}", bad.unwrap_err());

    store.append(LogEntry::Adjudication {
        topic: 31,
        turn: 7,
        relevant_turns: BTreeSet::from([1, 6]),
        adjudicator: "lead".into(),
        timestamp: 0,
    })?;
    print!("{}", store.export_csv()?);
    Ok(())
}
