//! Binary index file.
//!
//! Layout (little-endian):
//!
//! ```text
//! magic     8 bytes  "CVRLIDX\0"
//! version   u32
//! N         u64
//! avgdl     f64
//! checksum  32 bytes SHA-256 of body
//! body_len  u64
//! body      total_terms u64
//!           N × (id_len u32, id bytes, doc_length u32)
//!           T u64, T × (term_len u32, term bytes, cf u64, df u32, df × (doc u32, tf u32))
//! ```

use std::collections::HashMap;
use std::io::{Cursor, Read, Write};
use std::path::Path;

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};
use sha2::{Digest, Sha256};

use super::index::{InvertedIndex, Posting};
use crate::error::{Error, Result};

const MAGIC: &[u8; 8] = b"CVRLIDX\0";
pub const FORMAT_VERSION: u32 = 1;

fn write_str(buf: &mut Vec<u8>, s: &str) {
    buf.write_u32::<LittleEndian>(s.len() as u32).unwrap();
    buf.extend_from_slice(s.as_bytes());
}

fn encode_body(idx: &InvertedIndex) -> Vec<u8> {
    let mut buf = Vec::new();
    buf.write_u64::<LittleEndian>(idx.total_terms).unwrap();
    for (id, len) in idx.ids.iter().zip(&idx.doc_lengths) {
        write_str(&mut buf, id);
        buf.write_u32::<LittleEndian>(*len).unwrap();
    }
    buf.write_u64::<LittleEndian>(idx.terms.len() as u64).unwrap();
    for (t, term) in idx.terms.iter().enumerate() {
        write_str(&mut buf, term);
        buf.write_u64::<LittleEndian>(idx.cf[t]).unwrap();
        let list = &idx.postings[t];
        buf.write_u32::<LittleEndian>(list.len() as u32).unwrap();
        for p in list {
            buf.write_u32::<LittleEndian>(p.doc).unwrap();
            buf.write_u32::<LittleEndian>(p.tf).unwrap();
        }
    }
    buf
}

/// Serializes `idx` to bytes.
pub fn to_bytes(idx: &InvertedIndex) -> Vec<u8> {
    let body = encode_body(idx);
    let digest = Sha256::digest(&body);
    let mut out = Vec::with_capacity(body.len() + 68);
    out.extend_from_slice(MAGIC);
    out.write_u32::<LittleEndian>(FORMAT_VERSION).unwrap();
    out.write_u64::<LittleEndian>(idx.ids.len() as u64).unwrap();
    out.write_f64::<LittleEndian>(idx.avgdl).unwrap();
    out.extend_from_slice(&digest);
    out.write_u64::<LittleEndian>(body.len() as u64).unwrap();
    out.extend_from_slice(&body);
    out
}

fn corrupt(msg: impl Into<String>) -> Error {
    Error::IndexLoad(msg.into())
}

fn read_str(r: &mut Cursor<&[u8]>) -> Result<String> {
    let len = r.read_u32::<LittleEndian>().map_err(|_| corrupt("truncated string length"))? as usize;
    let mut bytes = vec![0u8; len];
    r.read_exact(&mut bytes).map_err(|_| corrupt("truncated string"))?;
    String::from_utf8(bytes).map_err(|_| corrupt("string is not UTF-8"))
}

/// Deserializes and validates an index produced by [`to_bytes`].
pub fn from_bytes(bytes: &[u8]) -> Result<InvertedIndex> {
    let mut r = Cursor::new(bytes);
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic).map_err(|_| corrupt("file too short for header"))?;
    if &magic != MAGIC {
        return Err(corrupt("not an index file"));
    }
    let header = |r: &mut Cursor<&[u8]>| -> std::io::Result<(u32, u64, f64, [u8; 32], u64)> {
        let version = r.read_u32::<LittleEndian>()?;
        let n = r.read_u64::<LittleEndian>()?;
        let avgdl = r.read_f64::<LittleEndian>()?;
        let mut checksum = [0u8; 32];
        r.read_exact(&mut checksum)?;
        let body_len = r.read_u64::<LittleEndian>()?;
        Ok((version, n, avgdl, checksum, body_len))
    };
    let (version, n, avgdl, checksum, body_len) = header(&mut r).map_err(|_| corrupt("truncated header"))?;
    if version != FORMAT_VERSION {
        return Err(corrupt(format!("format version {version}, expected {FORMAT_VERSION}")));
    }
    let start = r.position() as usize;
    let body = &bytes[start..];
    if body.len() as u64 != body_len || Sha256::digest(body).as_slice() != checksum {
        return Err(corrupt("checksum mismatch"));
    }

    let mut r = Cursor::new(body);
    let read_err = |_| corrupt("truncated body");
    let total_terms = r.read_u64::<LittleEndian>().map_err(read_err)?;
    let mut ids = Vec::with_capacity(n as usize);
    let mut doc_lengths = Vec::with_capacity(n as usize);
    for _ in 0..n {
        ids.push(read_str(&mut r)?);
        doc_lengths.push(r.read_u32::<LittleEndian>().map_err(read_err)?);
    }
    let num_terms = r.read_u64::<LittleEndian>().map_err(read_err)?;
    let mut terms = Vec::with_capacity(num_terms as usize);
    let mut vocab = HashMap::with_capacity(num_terms as usize);
    let mut cf = Vec::with_capacity(num_terms as usize);
    let mut postings = Vec::with_capacity(num_terms as usize);
    for t in 0..num_terms {
        let term = read_str(&mut r)?;
        cf.push(r.read_u64::<LittleEndian>().map_err(read_err)?);
        let df = r.read_u32::<LittleEndian>().map_err(read_err)?;
        let mut list = Vec::with_capacity(df as usize);
        for _ in 0..df {
            let doc = r.read_u32::<LittleEndian>().map_err(read_err)?;
            let tf = r.read_u32::<LittleEndian>().map_err(read_err)?;
            list.push(Posting { doc, tf });
        }
        postings.push(list);
        vocab.insert(term.clone(), t as u32);
        terms.push(term);
    }
    if (r.position() as usize) != body.len() {
        return Err(corrupt("trailing bytes after index body"));
    }
    let idx = InvertedIndex {
        ids,
        vocab,
        terms,
        postings,
        cf,
        doc_lengths,
        total_terms,
        avgdl,
    };
    idx.validate().map_err(|e| corrupt(e.to_string()))?;
    Ok(idx)
}

pub fn persist(idx: &InvertedIndex, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    file.write_all(&to_bytes(idx)).map_err(|e| Error::io(path, e))
}

pub fn load(path: impl AsRef<Path>) -> Result<InvertedIndex> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    from_bytes(&bytes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::retrieval::{Corpus, Passage};

    fn idx() -> InvertedIndex {
        InvertedIndex::build(
            &Corpus::new(vec![
                Passage::new("p1", "lung cancer treatment options lung"),
                Passage::new("p2", "boer goats are a breed of goat"),
                Passage::new("p3", "what is it"),
            ])
            .unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn round_trip() {
        let idx = idx();
        let back = from_bytes(&to_bytes(&idx)).unwrap();
        assert_eq!(back, idx);
        assert_eq!(to_bytes(&back), to_bytes(&idx));
    }

    #[test]
    fn truncated_file() {
        let bytes = to_bytes(&idx());
        let err = from_bytes(&bytes[..bytes.len() - 3]).unwrap_err();
        assert!(err.to_string().contains("checksum"), "{err}");
    }

    #[test]
    fn flipped_byte() {
        let mut bytes = to_bytes(&idx());
        let last = bytes.len() - 1;
        bytes[last] ^= 0xff;
        assert!(from_bytes(&bytes).unwrap_err().to_string().contains("checksum"));
    }

    #[test]
    fn wrong_version() {
        let mut bytes = to_bytes(&idx());
        bytes[8] = 9;
        assert!(from_bytes(&bytes).unwrap_err().to_string().contains("version"));
    }
}
