//! Every file format the crate writes reads back unchanged.

use proptest::prelude::*;

use convrel::conversation::{read_labels, write_labels, ConsensusLabel, LabelSource};
use convrel::evalir::{Qrels, Run};
use convrel::relevance::PredictionSet;
use convrel::retrieval::persist::{from_bytes, to_bytes};
use convrel::retrieval::{Corpus, InvertedIndex, Passage, RankedList};

const WORDS: &[&str] = &["goat", "cheese", "milk", "wine", "bronze", "collapse", "mars", "rover", "the", "of", "it's", "2019"];

fn text() -> impl Strategy<Value = String> {
    prop::collection::vec(prop::sample::select(WORDS), 0..12).prop_map(|w| w.join(" "))
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn index_bytes(texts in prop::collection::vec(text(), 1..20)) {
        let corpus = Corpus::new(texts.iter().enumerate().map(|(i, t)| Passage::new(format!("p{i}"), t.as_str())).collect()).unwrap();
        let idx = InvertedIndex::build(&corpus).unwrap();
        let back = from_bytes(&to_bytes(&idx)).unwrap();
        prop_assert_eq!(back, idx);
    }

    #[test]
    fn run_text(lists in prop::collection::btree_map(1u32..40, prop::collection::vec(any::<f64>().prop_filter("finite", |x| x.is_finite()), 1..15), 1..8)) {
        let mut run = Run::new("prop");
        for (turn, scores) in &lists {
            let entries = scores.iter().enumerate().map(|(i, s)| (format!("MARCO_{i}"), *s)).collect();
            run.insert(format!("31_{turn}"), RankedList::from_scores(entries).unwrap());
        }
        let mut buf = Vec::new();
        run.write(&mut buf).unwrap();
        prop_assert_eq!(Run::from_reader(buf.as_slice(), "run").unwrap(), run);
    }

    #[test]
    fn qrels_text(judgments in prop::collection::btree_map((1u32..5, 1u32..9, 0u32..30), 0u32..4, 0..40)) {
        let mut q = Qrels::new();
        for ((topic, turn, doc), g) in &judgments {
            q.insert(format!("{topic}_{turn}"), format!("CAR_{doc}"), *g).unwrap();
        }
        let mut buf = Vec::new();
        q.write(&mut buf).unwrap();
        prop_assert_eq!(Qrels::from_reader(buf.as_slice(), "qrels").unwrap(), q);
    }

    #[test]
    fn labels_csv(sets in prop::collection::vec(prop::collection::btree_set(1u32..10, 0..4), 1..10)) {
        let labels: Vec<ConsensusLabel> = sets
            .iter()
            .enumerate()
            .map(|(i, s)| {
                let turn = 10 + i as u32;
                let source = if i % 2 == 0 { LabelSource::Agreement } else { LabelSource::Adjudication };
                ConsensusLabel::new(7, turn, s.iter().copied(), source).unwrap()
            })
            .collect();
        let mut buf = Vec::new();
        write_labels(&labels, &mut buf).unwrap();
        prop_assert_eq!(read_labels(buf.as_slice(), "labels").unwrap(), labels);
    }

    #[test]
    fn predictions_csv(scores in prop::collection::vec(prop::collection::vec(0.0f64..1.0, 0..6), 1..8)) {
        let mut p = PredictionSet::new();
        for (i, row) in scores.iter().enumerate() {
            let key = (3, row.len() as u32 + 1 + 10 * i as u32);
            let set = row.iter().enumerate().filter(|(_, s)| **s >= 0.5).map(|(j, _)| j as u32 + 1).collect();
            p.insert(key, set).unwrap();
            for (j, s) in row.iter().enumerate() {
                p.set_score(key, j as u32 + 1, *s);
            }
        }
        let mut buf = Vec::new();
        p.write_csv(&mut buf).unwrap();
        prop_assert_eq!(PredictionSet::read_csv(buf.as_slice(), "pred").unwrap(), p);
    }
}
