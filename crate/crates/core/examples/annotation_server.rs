//! Serves the annotation API over the bundled conversations, with the log
//! kept in a temporary file. Try:
//!
//!   curl 'localhost:8080/tasks/next?annotator=ann1'
//!   curl -XPOST localhost:8080/annotations -H 'content-type: application/json' \
//!        -d '{"topic":1,"turn":2,"relevant_turns":[1],"annotator":"ann1"}'
//!   curl localhost:8080/export

use std::path::Path;

use convrel::conversation::parse_topics;
use convrel::interface::server::serve;
use convrel::interface::{AnnotationStore, AppState};

#[tokio::main]
async fn main() -> convrel::Result<()> {
    let fixtures = Path::new(env!("CARGO_MANIFEST_DIR")).join("data/fixtures");
    let topics = parse_topics(fixtures.join("topics.json"))?;
    let log = std::env::temp_dir().join("convrel-annotations.jsonl");
    let store = AnnotationStore::open(&log, 3)?;
    let addr = std::env::args().nth(1).unwrap_or_else(|| "127.0.0.1:8080".into());
    println!("annotation log {} ({} entries); listening on {addr}", log.display(), store.log().len());
    serve(&addr, AppState::new(topics, store)).await
}
