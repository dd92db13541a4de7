use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::io::{Read, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `(topic number, turn number)`.
pub type TurnKey = (u32, u32);

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LabelSource {
    #[default]
    Agreement,
    Adjudication,
}

impl fmt::Display for LabelSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LabelSource::Agreement => "agreement",
            LabelSource::Adjudication => "adjudication",
        })
    }
}

impl FromStr for LabelSource {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "" | "agreement" => Ok(LabelSource::Agreement),
            "adjudication" => Ok(LabelSource::Adjudication),
            other => Err(Error::InvalidInput(format!("unknown label source `{other}`"))),
        }
    }
}

/// Gold set of prior turns relevant to one turn.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConsensusLabel {
    pub topic: u32,
    pub turn: u32,
    pub relevant_turns: BTreeSet<u32>,
    pub source: LabelSource,
}

impl ConsensusLabel {
    pub fn new(topic: u32, turn: u32, relevant_turns: impl IntoIterator<Item = u32>, source: LabelSource) -> Result<Self> {
        let label = ConsensusLabel {
            topic,
            turn,
            relevant_turns: relevant_turns.into_iter().collect(),
            source,
        };
        check_prior(topic, turn, &label.relevant_turns)?;
        Ok(label)
    }

    /// Parses the compact `"turn: r1 r2"` notation, e.g. `"5: 1 6"`.
    pub fn parse_compact(topic: u32, spec: &str) -> Result<Self> {
        let (turn, rest) = spec
            .split_once(':')
            .ok_or_else(|| Error::InvalidInput(format!("expected `turn: relevant...`, got `{spec}`")))?;
        let turn = turn
            .trim()
            .parse::<u32>()
            .map_err(|e| Error::InvalidInput(format!("bad turn number `{turn}`: {e}")))?;
        Self::new(topic, turn, parse_turn_list(rest)?, LabelSource::Agreement)
    }

    pub fn key(&self) -> TurnKey {
        (self.topic, self.turn)
    }
}

pub(crate) fn check_prior(topic: u32, turn: u32, relevant: &BTreeSet<u32>) -> Result<()> {
    if turn == 0 {
        return Err(Error::Validation(format!("topic {topic}: turn numbers start at 1")));
    }
    if let Some(&bad) = relevant.iter().find(|&&r| r >= turn || r == 0) {
        return Err(Error::Validation(format!(
            "topic {topic} turn {turn}: relevant turn {bad} does not precede the current turn"
        )));
    }
    Ok(())
}

/// Splits a turn list on spaces, commas, semicolons or pipes. A lone `0`
/// marks a self-contained turn and yields the empty set.
pub fn parse_turn_list(field: &str) -> Result<BTreeSet<u32>> {
    let mut out = BTreeSet::new();
    for part in field
        .split(|c: char| c.is_whitespace() || matches!(c, ',' | ';' | '|' | '[' | ']'))
        .filter(|p| !p.is_empty())
    {
        let n = part
            .parse::<u32>()
            .map_err(|e| Error::InvalidInput(format!("bad turn number `{part}`: {e}")))?;
        if n != 0 {
            out.insert(n);
        }
    }
    Ok(out)
}

pub fn format_turn_list(turns: &BTreeSet<u32>) -> String {
    turns.iter().map(u32::to_string).collect::<Vec<_>>().join(" ")
}

/// Counts over a label set: labels, total relevant-turn annotations and the
/// distribution of relevant-turn set sizes.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct LabelSummary {
    pub labels: usize,
    pub relevance_annotations: usize,
    pub by_size: BTreeMap<usize, usize>,
}

impl LabelSummary {
    pub fn of(labels: &[ConsensusLabel]) -> Self {
        let mut s = LabelSummary {
            labels: labels.len(),
            ..Default::default()
        };
        for l in labels {
            s.relevance_annotations += l.relevant_turns.len();
            *s.by_size.entry(l.relevant_turns.len()).or_default() += 1;
        }
        s
    }

    pub fn share(&self, size: usize) -> f64 {
        if self.labels == 0 {
            return 0.0;
        }
        self.by_size.get(&size).copied().unwrap_or(0) as f64 / self.labels as f64
    }
}

const TOPIC_HEADERS: [&str; 6] = ["topic_number", "topic", "topic_id", "conversation_id", "conversation", "conv_id"];
const TURN_HEADERS: [&str; 6] = ["turn_number", "turn", "turn_id", "utterance", "utterance_number", "utterance_id"];
const REL_HEADERS: [&str; 8] = [
    "relevant_turn_numbers",
    "relevant_turns",
    "relevant",
    "rel_turns",
    "relevant_utterances",
    "relevant_utterance",
    "related_turns",
    "labels",
];
const QID_HEADERS: [&str; 3] = ["qid", "query_id", "id"];

fn find_column(headers: &csv::StringRecord, names: &[&str]) -> Option<usize> {
    headers
        .iter()
        .position(|h| names.contains(&h.trim().to_ascii_lowercase().as_str()))
}

/// Reads label CSV. Besides the canonical header
/// `topic_number,turn_number,relevant_turn_numbers[,source]` common
/// alternative names are accepted, as is a combined `qid` column of the form
/// `topic_turn`.
pub fn read_labels(reader: impl Read, source_name: &str) -> Result<Vec<ConsensusLabel>> {
    let mut rdr = csv::ReaderBuilder::new().flexible(true).trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers()?.clone();
    let rel_col = find_column(&headers, &REL_HEADERS)
        .ok_or_else(|| Error::parse(source_name, 1, "no relevant-turns column"))?;
    let source_col = find_column(&headers, &["source"]);
    let cols = match (find_column(&headers, &TOPIC_HEADERS), find_column(&headers, &TURN_HEADERS)) {
        (Some(t), Some(u)) => Columns::Split(t, u),
        _ => Columns::Qid(
            find_column(&headers, &QID_HEADERS)
                .ok_or_else(|| Error::parse(source_name, 1, "no topic/turn or qid columns"))?,
        ),
    };

    let mut labels = Vec::new();
    let mut seen = BTreeSet::new();
    for (i, record) in rdr.records().enumerate() {
        let line = i + 2;
        let record = record?;
        let field = |c: usize| record.get(c).unwrap_or("");
        let at = |e: Error| Error::parse(source_name, line, e.to_string());
        let (topic, turn) = match cols {
            Columns::Split(t, u) => (parse_u32(field(t)).map_err(at)?, parse_u32(field(u)).map_err(at)?),
            Columns::Qid(q) => parse_qid(field(q)).map_err(at)?,
        };
        let relevant = parse_turn_list(field(rel_col)).map_err(at)?;
        let source = match source_col {
            Some(c) => field(c).parse().map_err(at)?,
            None => LabelSource::Agreement,
        };
        let label = ConsensusLabel::new(topic, turn, relevant, source).map_err(at)?;
        if !seen.insert(label.key()) {
            return Err(Error::parse(
                source_name,
                line,
                format!("duplicate label for topic {topic} turn {turn}"),
            ));
        }
        labels.push(label);
    }
    labels.sort_by_key(ConsensusLabel::key);
    Ok(labels)
}

#[derive(Clone, Copy)]
enum Columns {
    Split(usize, usize),
    Qid(usize),
}

fn parse_u32(s: &str) -> Result<u32> {
    s.trim()
        .parse::<u32>()
        .map_err(|e| Error::InvalidInput(format!("bad number `{s}`: {e}")))
}

/// Splits a `topic_turn` query id.
pub fn parse_qid(qid: &str) -> Result<TurnKey> {
    let (t, u) = qid
        .split_once('_')
        .ok_or_else(|| Error::InvalidInput(format!("query id `{qid}` is not `topic_turn`")))?;
    Ok((parse_u32(t)?, parse_u32(u)?))
}

pub fn format_qid(topic: u32, turn: u32) -> String {
    format!("{topic}_{turn}")
}

pub fn load_castur(path: impl AsRef<Path>) -> Result<Vec<ConsensusLabel>> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_labels(file, &path.display().to_string())
}

/// Writes labels in the consensus export schema, sorted by (topic, turn).
pub fn write_labels(labels: &[ConsensusLabel], writer: impl Write) -> Result<()> {
    let mut sorted: Vec<&ConsensusLabel> = labels.iter().collect();
    sorted.sort_by_key(|l| l.key());
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["topic_number", "turn_number", "relevant_turn_numbers", "source"])?;
    for l in sorted {
        w.write_record([
            l.topic.to_string(),
            l.turn.to_string(),
            format_turn_list(&l.relevant_turns),
            l.source.to_string(),
        ])?;
    }
    w.flush().map_err(|e| Error::io("<label export>", e))?;
    Ok(())
}

/// Labels indexed by turn.
pub fn label_map(labels: &[ConsensusLabel]) -> BTreeMap<TurnKey, &ConsensusLabel> {
    labels.iter().map(|l| (l.key(), l)).collect()
}
