//! Conversations, turn-relevance labels, annotator agreement and
//! train/dev/test splitting.

mod agreement;
mod labels;
mod split;
mod topics;

pub use agreement::{agreement, Agreement, AnnotationBook, AnnotationRecord};
pub use labels::{
    format_qid, format_turn_list, label_map, load_castur, parse_qid, parse_turn_list, read_labels, write_labels,
    ConsensusLabel, LabelSource, LabelSummary, TurnKey,
};
pub use split::{split, Split, SplitScheme, DEFAULT_SEED};
pub use topics::{parse_topic_files, parse_topics, parse_topics_str, total_turns, Topic, Turn};
