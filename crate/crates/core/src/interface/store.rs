//! Append-only JSON-lines log of annotations and adjudications. The current
//! state is always the replay of the log.

use std::collections::BTreeSet;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::conversation::{write_labels, AnnotationBook, AnnotationRecord, ConsensusLabel};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum LogEntry {
    Annotation(AnnotationRecord),
    Adjudication {
        topic: u32,
        turn: u32,
        relevant_turns: BTreeSet<u32>,
        adjudicator: String,
        #[serde(default)]
        timestamp: u64,
    },
}

/// Applies one entry; rejected entries leave the book unchanged.
fn apply(book: &mut AnnotationBook, entry: &LogEntry) -> Result<Option<ConsensusLabel>> {
    match entry {
        LogEntry::Annotation(rec) => book.record(rec.clone()).map(|_| None),
        LogEntry::Adjudication {
            topic,
            turn,
            relevant_turns,
            adjudicator,
            ..
        } => {
            if adjudicator.trim().is_empty() {
                return Err(Error::Validation("adjudicator id is empty".into()));
            }
            book.adjudicate(*topic, *turn, relevant_turns.clone(), adjudicator.clone()).map(Some)
        }
    }
}

pub struct AnnotationStore {
    path: Option<PathBuf>,
    file: Option<File>,
    log: Vec<LogEntry>,
    book: AnnotationBook,
}

impl AnnotationStore {
    /// A store that keeps its log in memory only.
    pub fn in_memory(expected_annotators: usize) -> Self {
        AnnotationStore {
            path: None,
            file: None,
            log: Vec::new(),
            book: AnnotationBook::new(expected_annotators),
        }
    }

    /// Opens (or creates) the log at `path`, replaying existing entries.
    pub fn open(path: impl AsRef<Path>, expected_annotators: usize) -> Result<Self> {
        let path = path.as_ref();
        let mut store = AnnotationStore::in_memory(expected_annotators);
        if path.exists() {
            let f = File::open(path).map_err(|e| Error::io(path, e))?;
            let log = read_log(f, &path.display().to_string())?;
            store.book = replay(&log, expected_annotators)?;
            store.log = log;
        }
        let file = OpenOptions::new()
            .create(true)
            .append(true)
            .open(path)
            .map_err(|e| Error::io(path, e))?;
        store.path = Some(path.to_path_buf());
        store.file = Some(file);
        Ok(store)
    }

    pub fn path(&self) -> Option<&Path> {
        self.path.as_deref()
    }

    /// Validates and applies `entry`, then persists it. Nothing is written
    /// for a rejected entry.
    pub fn append(&mut self, entry: LogEntry) -> Result<Option<ConsensusLabel>> {
        let mut next = self.book.clone();
        let out = apply(&mut next, &entry)?;
        if let Some(f) = &mut self.file {
            let line = serde_json::to_string(&entry)?;
            let path = self.path.as_deref().unwrap_or(Path::new("<annotation log>"));
            writeln!(f, "{line}").and_then(|_| f.flush()).map_err(|e| Error::io(path, e))?;
        }
        self.book = next;
        self.log.push(entry);
        Ok(out)
    }

    pub fn book(&self) -> &AnnotationBook {
        &self.book
    }

    pub fn log(&self) -> &[LogEntry] {
        &self.log
    }

    /// Consensus CSV: one row per settled turn.
    pub fn export_csv(&self) -> Result<String> {
        export_csv(&self.book)
    }
}

pub fn export_csv(book: &AnnotationBook) -> Result<String> {
    let mut buf = Vec::new();
    write_labels(&book.consensus_labels(), &mut buf)?;
    Ok(String::from_utf8(buf).expect("csv output is utf-8"))
}

pub fn read_log(reader: impl Read, source_name: &str) -> Result<Vec<LogEntry>> {
    let mut out = Vec::new();
    for (i, line) in BufReader::new(reader).lines().enumerate() {
        let line = line.map_err(|e| Error::io(source_name, e))?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|e| Error::parse(source_name, i + 1, e.to_string()))?);
    }
    Ok(out)
}

/// Rebuilds the state view from a log. Every entry must apply cleanly.
pub fn replay(log: &[LogEntry], expected_annotators: usize) -> Result<AnnotationBook> {
    let mut book = AnnotationBook::new(expected_annotators);
    for (i, entry) in log.iter().enumerate() {
        apply(&mut book, entry).map_err(|e| Error::Validation(format!("log entry {}: {e}", i + 1)))?;
    }
    Ok(book)
}
