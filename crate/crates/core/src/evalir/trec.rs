use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::retrieval::RankedList;

/// Graded judgments: query id → passage id → grade.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Qrels {
    judgments: BTreeMap<String, BTreeMap<String, u32>>,
}

impl Qrels {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds a judgment; a second grade for the same pair is an error.
    pub fn insert(&mut self, qid: impl Into<String>, docid: impl Into<String>, grade: u32) -> Result<()> {
        let qid = qid.into();
        let docid = docid.into();
        let q = self.judgments.entry(qid.clone()).or_default();
        if q.contains_key(&docid) {
            return Err(Error::DuplicateId(format!("{qid} {docid}")));
        }
        q.insert(docid, grade);
        Ok(())
    }

    pub fn grade(&self, qid: &str, docid: &str) -> u32 {
        self.judgments
            .get(qid)
            .and_then(|q| q.get(docid))
            .copied()
            .unwrap_or(0)
    }

    pub fn query(&self, qid: &str) -> Option<&BTreeMap<String, u32>> {
        self.judgments.get(qid)
    }

    pub fn qids(&self) -> impl Iterator<Item = &str> {
        self.judgments.keys().map(String::as_str)
    }

    pub fn num_relevant(&self, qid: &str, threshold: u32) -> usize {
        self.judgments
            .get(qid)
            .map_or(0, |q| q.values().filter(|&&g| g >= threshold).count())
    }

    pub fn len(&self) -> usize {
        self.judgments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.judgments.is_empty()
    }

    /// Lines `qid 0 docid grade`.
    pub fn from_reader(reader: impl Read, source_name: &str) -> Result<Self> {
        let mut q = Qrels::new();
        for (i, line) in BufReader::new(reader).lines().enumerate() {
            let line = line.map_err(|e| Error::io(source_name, e))?;
            if line.trim().is_empty() {
                continue;
            }
            let at = |m: String| Error::parse(source_name, i + 1, m);
            let f: Vec<&str> = line.split_whitespace().collect();
            if f.len() != 4 {
                return Err(at(format!("expected 4 fields, found {}", f.len())));
            }
            let grade: i64 = f[3].parse().map_err(|_| at(format!("bad grade `{}`", f[3])))?;
            // some collections mark unjudgeable passages with negative grades
            let grade = u32::try_from(grade.max(0)).map_err(|_| at(format!("grade {grade} out of range")))?;
            q.insert(f[0], f[2], grade).map_err(|e| at(e.to_string()))?;
        }
        Ok(q)
    }

    pub fn write(&self, w: impl Write) -> Result<()> {
        let mut w = BufWriter::new(w);
        for (qid, docs) in &self.judgments {
            for (doc, g) in docs {
                writeln!(w, "{qid} 0 {doc} {g}").map_err(|e| Error::io("<qrels>", e))?;
            }
        }
        w.flush().map_err(|e| Error::io("<qrels>", e))
    }
}

pub fn read_qrels(path: impl AsRef<Path>) -> Result<Qrels> {
    let path = path.as_ref();
    let f = File::open(path).map_err(|e| Error::io(path, e))?;
    Qrels::from_reader(f, &path.display().to_string())
}

/// Ranked lists per query id under one run tag.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Run {
    pub tag: String,
    pub queries: BTreeMap<String, RankedList>,
}

impl Run {
    pub fn new(tag: impl Into<String>) -> Self {
        Run {
            tag: tag.into(),
            queries: BTreeMap::new(),
        }
    }

    pub fn insert(&mut self, qid: impl Into<String>, list: RankedList) {
        self.queries.insert(qid.into(), list);
    }

    pub fn get(&self, qid: &str) -> Option<&RankedList> {
        self.queries.get(qid)
    }

    pub fn qids(&self) -> impl Iterator<Item = &str> {
        self.queries.keys().map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.queries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.queries.is_empty()
    }

    /// Lines `qid Q0 docid rank score tag`. Scores use the shortest
    /// representation that parses back to the same value.
    pub fn write(&self, w: impl Write) -> Result<()> {
        if self.tag.is_empty() || self.tag.contains(char::is_whitespace) {
            return Err(Error::InvalidInput(format!("run tag `{}` must be a non-empty single word", self.tag)));
        }
        let mut w = BufWriter::new(w);
        for (qid, list) in &self.queries {
            for (rank, (doc, score)) in list.entries().iter().enumerate() {
                writeln!(w, "{qid} Q0 {doc} {} {score:?} {}", rank + 1, self.tag).map_err(|e| Error::io("<run>", e))?;
            }
        }
        w.flush().map_err(|e| Error::io("<run>", e))
    }

    /// Parses a run. Ranks must be contiguous from 1 within each query, and
    /// all lines must share one tag.
    pub fn from_reader(reader: impl Read, source_name: &str) -> Result<Self> {
        let mut tag: Option<String> = None;
        let mut lists: BTreeMap<String, Vec<(String, f64)>> = BTreeMap::new();
        for (i, line) in BufReader::new(reader).lines().enumerate() {
            let line = line.map_err(|e| Error::io(source_name, e))?;
            if line.trim().is_empty() {
                continue;
            }
            let at = |m: String| Error::parse(source_name, i + 1, m);
            let f: Vec<&str> = line.split_whitespace().collect();
            if f.len() != 6 {
                return Err(at(format!("expected 6 fields, found {}", f.len())));
            }
            if f[1] != "Q0" {
                return Err(at(format!("second field must be `Q0`, found `{}`", f[1])));
            }
            let rank: usize = f[3].parse().map_err(|_| at(format!("bad rank `{}`", f[3])))?;
            let score: f64 = f[4].parse().map_err(|_| at(format!("bad score `{}`", f[4])))?;
            match &tag {
                None => tag = Some(f[5].to_string()),
                Some(t) if t != f[5] => return Err(at(format!("tag `{}` differs from `{t}`", f[5]))),
                _ => {}
            }
            let list = lists.entry(f[0].to_string()).or_default();
            if rank != list.len() + 1 {
                return Err(at(format!("rank {rank} for {} should be {}", f[0], list.len() + 1)));
            }
            list.push((f[2].to_string(), score));
        }
        let mut run = Run::new(tag.unwrap_or_default());
        for (qid, entries) in lists {
            let list = RankedList::from_ranked(entries)
                .map_err(|e| Error::parse(source_name, 0, format!("query {qid}: {e}")))?;
            run.insert(qid, list);
        }
        Ok(run)
    }
}

pub fn write_run(run: &Run, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let f = File::create(path).map_err(|e| Error::io(path, e))?;
    run.write(f)
}

pub fn read_run(path: impl AsRef<Path>) -> Result<Run> {
    let path = path.as_ref();
    let f = File::open(path).map_err(|e| Error::io(path, e))?;
    Run::from_reader(f, &path.display().to_string())
}
