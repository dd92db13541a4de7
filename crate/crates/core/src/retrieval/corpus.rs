use std::collections::HashSet;
use std::fmt;
use std::io::{BufRead, BufReader, Read};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Passage {
    pub id: String,
    pub text: String,
}

impl Passage {
    pub fn new(id: impl Into<String>, text: impl Into<String>) -> Self {
        Passage {
            id: id.into(),
            text: text.into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CorpusFormat {
    Tsv,
    Jsonl,
}

impl CorpusFormat {
    /// Guesses the format from a file extension, defaulting to TSV.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some("jsonl") | Some("json") => CorpusFormat::Jsonl,
            _ => CorpusFormat::Tsv,
        }
    }
}

impl FromStr for CorpusFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "tsv" => Ok(CorpusFormat::Tsv),
            "jsonl" => Ok(CorpusFormat::Jsonl),
            other => Err(Error::InvalidInput(format!("unknown corpus format `{other}`"))),
        }
    }
}

impl fmt::Display for CorpusFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CorpusFormat::Tsv => "tsv",
            CorpusFormat::Jsonl => "jsonl",
        })
    }
}

/// An ordered collection of passages with unique, whitespace-free ids.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Corpus {
    passages: Vec<Passage>,
}

impl Corpus {
    pub fn new(passages: Vec<Passage>) -> Result<Self> {
        let mut seen = HashSet::with_capacity(passages.len());
        for p in &passages {
            validate_id(&p.id)?;
            if !seen.insert(p.id.as_str()) {
                return Err(Error::DuplicateId(p.id.clone()));
            }
        }
        Ok(Corpus { passages })
    }

    pub fn passages(&self) -> &[Passage] {
        &self.passages
    }

    pub fn len(&self) -> usize {
        self.passages.len()
    }

    pub fn is_empty(&self) -> bool {
        self.passages.is_empty()
    }

    pub fn from_reader(reader: impl Read, format: CorpusFormat, source_name: &str) -> Result<Self> {
        let mut passages = Vec::new();
        let mut seen = HashSet::new();
        for (i, line) in BufReader::new(reader).lines().enumerate() {
            let lineno = i + 1;
            let line = line.map_err(|e| Error::parse(source_name, lineno, e.to_string()))?;
            if line.trim().is_empty() {
                continue;
            }
            let passage = match format {
                CorpusFormat::Tsv => {
                    let (id, text) = line
                        .split_once('\t')
                        .ok_or_else(|| Error::parse(source_name, lineno, "expected `id<TAB>text`"))?;
                    Passage::new(id.trim(), text)
                }
                CorpusFormat::Jsonl => serde_json::from_str::<Passage>(&line)
                    .map_err(|e| Error::parse(source_name, lineno, e.to_string()))?,
            };
            validate_id(&passage.id).map_err(|e| Error::parse(source_name, lineno, e.to_string()))?;
            if !seen.insert(passage.id.clone()) {
                return Err(Error::DuplicateId(passage.id));
            }
            passages.push(passage);
        }
        Ok(Corpus { passages })
    }
}

fn validate_id(id: &str) -> Result<()> {
    if id.is_empty() || id.chars().any(char::is_whitespace) {
        return Err(Error::InvalidInput(format!("passage id `{id}` is empty or contains whitespace")));
    }
    Ok(())
}

/// Reads a `id<TAB>text` or JSON-lines corpus file.
pub fn ingest(path: impl AsRef<Path>, format: CorpusFormat) -> Result<Corpus> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    Corpus::from_reader(file, format, &path.display().to_string())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tsv_rows() {
        let c = Corpus::from_reader("d1\tlung cancer\nd2\tboer goats\n".as_bytes(), CorpusFormat::Tsv, "c").unwrap();
        assert_eq!(c.len(), 2);
        assert_eq!(c.passages()[1], Passage::new("d2", "boer goats"));
    }

    #[test]
    fn missing_tab() {
        let err = Corpus::from_reader("d1\tok\nd2 no tab\n".as_bytes(), CorpusFormat::Tsv, "c").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }));
    }

    #[test]
    fn duplicate_ids() {
        let err = Corpus::from_reader("d1\ta\nd1\tb\n".as_bytes(), CorpusFormat::Tsv, "c").unwrap_err();
        assert!(matches!(err, Error::DuplicateId(ref id) if id == "d1"));
    }

    #[test]
    fn jsonl_matches_tsv() {
        let tsv = Corpus::from_reader("d1\tlung cancer\nd2\tboer goats\n".as_bytes(), CorpusFormat::Tsv, "c").unwrap();
        let jsonl = Corpus::from_reader(
            "{\"id\":\"d1\",\"text\":\"lung cancer\"}\n{\"id\":\"d2\",\"text\":\"boer goats\"}\n".as_bytes(),
            CorpusFormat::Jsonl,
            "c",
        )
        .unwrap();
        assert_eq!(tsv, jsonl);
        let err = Corpus::from_reader("{\"id\":\"d1\"}\n".as_bytes(), CorpusFormat::Jsonl, "c").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 1, .. }));
    }
}
