use std::collections::HashMap;
use std::io::{BufRead, BufReader, Read};
use std::path::Path;

use super::tokenize::{process, TokenSequence};
use crate::error::{Error, Result};

/// Word vectors of a fixed dimension, read-only after loading.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingTable {
    dimension: usize,
    vectors: HashMap<String, Vec<f64>>,
}

impl EmbeddingTable {
    pub fn new(dimension: usize) -> Result<Self> {
        if dimension == 0 {
            return Err(Error::InvalidInput("embedding dimension must be positive".into()));
        }
        Ok(EmbeddingTable {
            dimension,
            vectors: HashMap::new(),
        })
    }

    pub fn insert(&mut self, token: impl Into<String>, vector: Vec<f64>) -> Result<()> {
        if vector.len() != self.dimension {
            return Err(Error::DimensionMismatch {
                left: self.dimension,
                right: vector.len(),
            });
        }
        self.vectors.insert(token.into(), vector);
        Ok(())
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn get(&self, token: &str) -> Option<&[f64]> {
        self.vectors.get(token).map(Vec::as_slice)
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    /// Parses the GloVe text layout: a token followed by `D` space-separated
    /// reals per line. `D` is fixed by the first line.
    pub fn from_reader(reader: impl Read, source_name: &str) -> Result<Self> {
        let mut table: Option<EmbeddingTable> = None;
        for (i, line) in BufReader::new(reader).lines().enumerate() {
            let lineno = i + 1;
            let line = line.map_err(|e| Error::parse(source_name, lineno, e.to_string()))?;
            let line = line.trim_end();
            if line.is_empty() {
                continue;
            }
            let mut fields = line.split(' ');
            let token = fields.next().unwrap_or_default();
            let vector = fields
                .map(|f| f.parse::<f64>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|e| Error::parse(source_name, lineno, format!("bad component: {e}")))?;
            if vector.is_empty() {
                return Err(Error::parse(source_name, lineno, "missing vector components"));
            }
            let table = match table.as_mut() {
                Some(t) => t,
                None => table.insert(EmbeddingTable::new(vector.len())?),
            };
            if vector.len() != table.dimension {
                return Err(Error::parse(
                    source_name,
                    lineno,
                    format!("expected {} components, found {}", table.dimension, vector.len()),
                ));
            }
            table.vectors.insert(token.to_owned(), vector);
        }
        table.ok_or_else(|| Error::parse(source_name, 0, "embedding file is empty"))
    }
}

pub fn load_embeddings(path: impl AsRef<Path>) -> Result<EmbeddingTable> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    EmbeddingTable::from_reader(file, &path.display().to_string())
}

/// An averaged word embedding. `missing` is set when no token was found in
/// the table and the vector is all zeros.
#[derive(Debug, Clone, PartialEq)]
pub struct Awe {
    pub vector: Vec<f64>,
    pub missing: bool,
}

/// Mean vector over the processed tokens of `text` present in `table`.
pub fn awe(text: &str, table: &EmbeddingTable) -> Awe {
    awe_tokens(&process(text), table)
}

pub fn awe_tokens(tokens: &TokenSequence, table: &EmbeddingTable) -> Awe {
    let mut sum = vec![0.0; table.dimension];
    let mut found = 0usize;
    for t in tokens {
        if let Some(v) = table.get(t) {
            found += 1;
            for (s, x) in sum.iter_mut().zip(v) {
                *s += x;
            }
        }
    }
    if found == 0 {
        return Awe {
            vector: sum,
            missing: true,
        };
    }
    let n = found as f64;
    sum.iter_mut().for_each(|s| *s /= n);
    Awe {
        vector: sum,
        missing: false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table() -> EmbeddingTable {
        EmbeddingTable::from_reader("goat 1 2\ncheese 3 4\nmilk -1 -2\n".as_bytes(), "t").unwrap()
    }

    #[test]
    fn means() {
        let t = table();
        assert_eq!(awe("goat", &t).vector, vec![1.0, 2.0]);
        assert_eq!(awe("goat cheese", &t).vector, vec![2.0, 3.0]);
        assert_eq!(awe("goat milk", &t).vector, vec![0.0, 0.0]);
        assert_eq!(awe("cheese goat", &t), awe("goat cheese", &t));
        let none = awe("unknown words", &t);
        assert!(none.missing);
        assert_eq!(none.vector, vec![0.0, 0.0]);
    }

    #[test]
    fn malformed_lines() {
        let err = EmbeddingTable::from_reader("a 1 2\nb 1 x\n".as_bytes(), "emb").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }), "{err}");
        let err = EmbeddingTable::from_reader("a 1 2\nb 1\n".as_bytes(), "emb").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }));
        assert!(EmbeddingTable::from_reader("".as_bytes(), "emb").is_err());
    }
}
