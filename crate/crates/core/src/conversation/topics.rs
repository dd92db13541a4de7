use std::collections::BTreeSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Turn {
    pub number: u32,
    pub raw_utterance: String,
}

/// A conversation. Turns are numbered `1..=n` in order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Topic {
    pub number: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub title: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
    #[serde(alias = "turn")]
    pub turns: Vec<Turn>,
}

impl Topic {
    pub fn new(number: u32, utterances: &[&str]) -> Self {
        Topic {
            number,
            title: None,
            description: None,
            turns: utterances
                .iter()
                .enumerate()
                .map(|(i, u)| Turn {
                    number: i as u32 + 1,
                    raw_utterance: (*u).to_owned(),
                })
                .collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.turns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.turns.is_empty()
    }

    /// Turn `n` (1-based).
    pub fn turn(&self, n: u32) -> Option<&Turn> {
        n.checked_sub(1).and_then(|i| self.turns.get(i as usize))
    }

    pub fn utterance(&self, n: u32) -> Option<&str> {
        self.turn(n).map(|t| t.raw_utterance.as_str())
    }

    pub fn validate(&self) -> Result<()> {
        if self.turns.is_empty() {
            return Err(Error::Validation(format!("topic {} has no turns", self.number)));
        }
        for (i, t) in self.turns.iter().enumerate() {
            if t.number != i as u32 + 1 {
                return Err(Error::Validation(format!(
                    "topic {}: turn numbers are not consecutive from 1 (found {} at position {})",
                    self.number,
                    t.number,
                    i + 1
                )));
            }
            if t.raw_utterance.trim().is_empty() {
                return Err(Error::Validation(format!("topic {} turn {} is empty", self.number, t.number)));
            }
        }
        Ok(())
    }
}

/// Parses topics from the JSON layout (an array of objects with `number` and
/// `turn`/`turns`), checking turn numbering and topic uniqueness.
pub fn parse_topics_str(json: &str) -> Result<Vec<Topic>> {
    if json.trim().is_empty() {
        return Err(Error::Validation("topic file is empty".into()));
    }
    let topics: Vec<Topic> = serde_json::from_str(json)?;
    if topics.is_empty() {
        return Err(Error::Validation("topic file contains no topics".into()));
    }
    check_topics(&topics)?;
    Ok(topics)
}

fn check_topics(topics: &[Topic]) -> Result<()> {
    let mut seen = BTreeSet::new();
    for t in topics {
        t.validate()?;
        if !seen.insert(t.number) {
            return Err(Error::Validation(format!("duplicate topic number {}", t.number)));
        }
    }
    Ok(())
}

pub fn parse_topics(path: impl AsRef<Path>) -> Result<Vec<Topic>> {
    let path = path.as_ref();
    let json = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_topics_str(&json).map_err(|e| match e {
        Error::Json(j) => Error::parse(path.display().to_string(), j.line(), j.to_string()),
        other => other,
    })
}

/// Loads several topic files (e.g. training and evaluation sets) into one
/// list sorted by topic number.
pub fn parse_topic_files<P: AsRef<Path>>(paths: &[P]) -> Result<Vec<Topic>> {
    let mut all = Vec::new();
    for p in paths {
        all.extend(parse_topics(p)?);
    }
    check_topics(&all)?;
    all.sort_by_key(|t| t.number);
    Ok(all)
}

pub fn total_turns(topics: &[Topic]) -> usize {
    topics.iter().map(Topic::len).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cast_layout() {
        let json = r#"[{"number": 31, "title": "head and neck cancer", "turn": [
            {"number": 1, "raw_utterance": "What is throat cancer?"},
            {"number": 2, "raw_utterance": "Is it treatable?"}]}]"#;
        let topics = parse_topics_str(json).unwrap();
        assert_eq!(topics.len(), 1);
        assert_eq!(topics[0].len(), 2);
        assert_eq!(topics[0].utterance(2), Some("Is it treatable?"));
        assert_eq!(topics[0].title.as_deref(), Some("head and neck cancer"));
    }

    #[test]
    fn rejects_bad_input() {
        assert!(parse_topics_str("").is_err());
        assert!(parse_topics_str("[]").is_err());
        let gap = r#"[{"number": 1, "turns": [{"number": 1, "raw_utterance": "a"}, {"number": 3, "raw_utterance": "b"}]}]"#;
        assert!(parse_topics_str(gap).is_err());
        let dup = r#"[{"number": 1, "turns": [{"number": 1, "raw_utterance": "a"}]},
                      {"number": 1, "turns": [{"number": 1, "raw_utterance": "b"}]}]"#;
        assert!(parse_topics_str(dup).unwrap_err().to_string().contains("duplicate"));
    }
}
