//! Builds an index over the bundled 200-passage corpus, searches it with
//! BM25, query likelihood and DFR, and round-trips the index through disk.

use std::path::Path;

use convrel::retrieval::{ingest, load, persist, retrieve, CorpusFormat, InvertedIndex, Model, RetrieveOptions};
use convrel::textproc::process;

fn main() -> convrel::Result<()> {
    let fixtures = Path::new(env!("CARGO_MANIFEST_DIR")).join("data/fixtures");
    let corpus = ingest(fixtures.join("corpus.tsv"), CorpusFormat::Tsv)?;
    let idx = InvertedIndex::build(&corpus)?;
    println!("{} passages, {} terms, avgdl {:.2}", idx.num_docs(), idx.num_terms(), idx.avgdl());

    let query = process("how does cold weather affect electric car range");
    for model in Model::ALL {
        let opts = RetrieveOptions {
            exhaustive_ql: model == Model::Ql,
            ..Default::default()
        };
        let hits = retrieve(&query, model, 3, &idx, &opts)?;
        println!("{}:", model.name());
        for (rank, (id, score)) in hits.ranked.entries().iter().enumerate() {
            let text = &corpus.passages().iter().find(|p| &p.id == id).unwrap().text;
            println!("  {} {id} {score:.4}  {}", rank + 1, &text[..text.len().min(70)]);
        }
    }

    let path = std::env::temp_dir().join("convrel-example.idx");
    persist(&idx, &path)?;
    assert_eq!(load(&path)?, idx);
    println!("index persisted to {} and reloaded unchanged", path.display());
    Ok(())
}
