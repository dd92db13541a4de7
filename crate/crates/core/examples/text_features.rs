//! Tokenizing, stopping, TF-IDF similarity and question categories for a
//! few conversational utterances.

use convrel::textproc::{categorize, cosine, pronoun_stats, process, tfidf, tokenize, top_trigrams, DocFreqStats};

fn main() -> convrel::Result<()> {
    let turns = [
        "What is throat cancer?",
        "Is it treatable?",
        "Tell me about lung cancer.",
        "What are its symptoms?",
        "Which of the two cancers is more common?",
    ];

    for t in &turns {
        println!("{:<45} tokens={:<40} stopped={:<28} category={}", t, tokenize(t).joined(), process(t).joined(), categorize(t)?.name());
    }

    // one document per utterance
    let stats = DocFreqStats::build(&turns);
    let first = tfidf(turns[0], &stats);
    for t in &turns[1..] {
        println!("cos(turn 1, {t:?}) = {:.3}", cosine(&first, &tfidf(t, &stats))?);
    }

    let p = pronoun_stats(&turns);
    println!(
        "{:.0}% of turns use a pronoun; {:.0}% of those as the third token",
        100.0 * p.share_with_pronoun,
        100.0 * p.share_third_position
    );
    for (tri, share) in top_trigrams(&turns, 3)?.top {
        println!("leading trigram {tri:?}: {share:.2}");
    }
    Ok(())
}
