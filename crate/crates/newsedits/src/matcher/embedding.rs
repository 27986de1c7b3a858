//! Precomputed token-embedding files.
//!
//! Vectors are produced externally and consumed here read-only. Two
//! serializations are supported:
//!
//! * binary: header `{magic "NEDV1", dim: u32, count: u64}` followed by
//!   `count` records `{key: u64, version: u32, sentence: u32, token: u32,
//!   dim x f32}`, all little-endian;
//! * debug JSONL: one object per line with fields `key`, `version`,
//!   `sentence`, `token`, `vector`.
//!
//! `key` is the 64-bit article key from [`crate::hash::article_key`];
//! `sentence` is the 1-based sentence index, `token` the 0-based token index
//! within the sentence. Every vector must be L2-normalized to within 1e-6 and
//! share the file's dimension.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matcher::TokenAddr;

/// Magic bytes opening a binary embedding file.
pub const NEDV_MAGIC: &[u8; 5] = b"NEDV1";

const NORM_TOLERANCE: f64 = 1e-6;

/// One token vector keyed by its address.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EmbeddingRecord {
    pub key: u64,
    pub version: u32,
    pub sentence: u32,
    pub token: u32,
    pub vector: Vec<f32>,
}

impl EmbeddingRecord {
    pub fn addr(&self) -> TokenAddr {
        TokenAddr {
            article: self.key,
            version: self.version,
            sentence: self.sentence,
            token: self.token,
        }
    }
}

/// In-memory read-only lookup from token address to unit vector.
pub struct EmbeddingProvider {
    dim: usize,
    offsets: HashMap<TokenAddr, usize>,
    data: Vec<f32>,
}

impl EmbeddingProvider {
    /// Build a provider from records, validating dimension and unit norm.
    pub fn from_records<I>(records: I) -> Result<EmbeddingProvider>
    where
        I: IntoIterator<Item = EmbeddingRecord>,
    {
        let mut provider = EmbeddingProvider {
            dim: 0,
            offsets: HashMap::new(),
            data: Vec::new(),
        };
        for rec in records {
            provider.push(rec)?;
        }
        Ok(provider)
    }

    fn push(&mut self, rec: EmbeddingRecord) -> Result<()> {
        if self.offsets.is_empty() {
            if rec.vector.is_empty() {
                return Err(Error::Embedding("zero-dimensional vector".into()));
            }
            self.dim = rec.vector.len();
        } else if rec.vector.len() != self.dim {
            return Err(Error::Embedding(format!(
                "dimension mismatch at {:?}: expected {}, got {}",
                rec.addr(),
                self.dim,
                rec.vector.len()
            )));
        }
        let norm: f64 = rec
            .vector
            .iter()
            .map(|v| f64::from(*v) * f64::from(*v))
            .sum::<f64>()
            .sqrt();
        if (norm - 1.0).abs() > NORM_TOLERANCE {
            return Err(Error::Embedding(format!(
                "vector at {:?} is not unit-normalized (|v| = {norm})",
                rec.addr()
            )));
        }
        let offset = self.data.len();
        self.data.extend_from_slice(&rec.vector);
        self.offsets.insert(rec.addr(), offset);
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.offsets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.offsets.is_empty()
    }

    /// Vector for a token address, if present.
    pub fn get(&self, addr: &TokenAddr) -> Option<&[f32]> {
        self.offsets
            .get(addr)
            .map(|&off| &self.data[off..off + self.dim])
    }

    /// Load either serialization, sniffing the binary magic.
    pub fn load(path: &Path) -> Result<EmbeddingProvider> {
        let mut file = File::open(path)?;
        let mut magic = [0u8; 5];
        let n = file.read(&mut magic)?;
        if n == 5 && &magic == NEDV_MAGIC {
            let mut reader = BufReader::new(file);
            Self::read_binary_body(&mut reader)
        } else {
            drop(file);
            Self::read_jsonl(BufReader::new(File::open(path)?))
        }
    }

    /// Read the binary form, magic included.
    pub fn read_binary<R: Read>(mut reader: R) -> Result<EmbeddingProvider> {
        let mut magic = [0u8; 5];
        reader.read_exact(&mut magic)?;
        if &magic != NEDV_MAGIC {
            return Err(Error::Embedding(format!(
                "bad magic {:?}, expected {:?}",
                magic, NEDV_MAGIC
            )));
        }
        Self::read_binary_body(&mut reader)
    }

    fn read_binary_body<R: Read>(reader: &mut R) -> Result<EmbeddingProvider> {
        let dim = read_u32(reader)? as usize;
        if dim == 0 {
            return Err(Error::Embedding("zero-dimensional file".into()));
        }
        let count = read_u64(reader)?;
        let mut provider = EmbeddingProvider {
            dim: 0,
            offsets: HashMap::with_capacity(count as usize),
            data: Vec::with_capacity(count as usize * dim),
        };
        let mut payload = vec![0u8; dim * 4];
        for _ in 0..count {
            let key = read_u64(reader)?;
            let version = read_u32(reader)?;
            let sentence = read_u32(reader)?;
            let token = read_u32(reader)?;
            reader.read_exact(&mut payload)?;
            let vector: Vec<f32> = payload
                .chunks_exact(4)
                .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
                .collect();
            provider.push(EmbeddingRecord {
                key,
                version,
                sentence,
                token,
                vector,
            })?;
        }
        Ok(provider)
    }

    /// Read the debug JSONL form.
    pub fn read_jsonl<R: BufRead>(reader: R) -> Result<EmbeddingProvider> {
        let mut provider = EmbeddingProvider {
            dim: 0,
            offsets: HashMap::new(),
            data: Vec::new(),
        };
        for (no, line) in reader.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let rec: EmbeddingRecord = serde_json::from_str(&line).map_err(|e| {
                Error::Embedding(format!("line {}: invalid record: {e}", no + 1))
            })?;
            provider.push(rec)?;
        }
        Ok(provider)
    }
}

/// Write records in the binary form.
pub fn write_binary<W: Write>(mut w: W, dim: u32, records: &[EmbeddingRecord]) -> Result<()> {
    w.write_all(NEDV_MAGIC)?;
    w.write_all(&dim.to_le_bytes())?;
    w.write_all(&(records.len() as u64).to_le_bytes())?;
    for rec in records {
        if rec.vector.len() != dim as usize {
            return Err(Error::Embedding(format!(
                "record {:?} has dimension {}, file has {dim}",
                rec.addr(),
                rec.vector.len()
            )));
        }
        w.write_all(&rec.key.to_le_bytes())?;
        w.write_all(&rec.version.to_le_bytes())?;
        w.write_all(&rec.sentence.to_le_bytes())?;
        w.write_all(&rec.token.to_le_bytes())?;
        for v in &rec.vector {
            w.write_all(&v.to_le_bytes())?;
        }
    }
    Ok(())
}

/// Write records in the debug JSONL form.
pub fn write_jsonl<W: Write>(mut w: W, records: &[EmbeddingRecord]) -> Result<()> {
    for rec in records {
        serde_json::to_writer(&mut w, rec)
            .map_err(|e| Error::Embedding(format!("serialize: {e}")))?;
        w.write_all(b"\n")?;
    }
    Ok(())
}

fn read_u32<R: Read>(r: &mut R) -> Result<u32> {
    let mut buf = [0u8; 4];
    r.read_exact(&mut buf)?;
    Ok(u32::from_le_bytes(buf))
}

fn read_u64<R: Read>(r: &mut R) -> Result<u64> {
    let mut buf = [0u8; 8];
    r.read_exact(&mut buf)?;
    Ok(u64::from_le_bytes(buf))
}

/// Normalize a vector to unit length in f64 then cast to f32.
pub fn unit_vector(raw: &[f64]) -> Vec<f32> {
    let norm = raw.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm == 0.0 {
        let mut v = vec![0.0f32; raw.len()];
        if let Some(first) = v.first_mut() {
            *first = 1.0;
        }
        return v;
    }
    raw.iter().map(|v| (v / norm) as f32).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(key: u64, version: u32, sentence: u32, token: u32, raw: &[f64]) -> EmbeddingRecord {
        EmbeddingRecord {
            key,
            version,
            sentence,
            token,
            vector: unit_vector(raw),
        }
    }

    #[test]
    fn binary_round_trip() {
        let records = vec![
            rec(1, 1, 1, 0, &[1.0, 2.0, 3.0]),
            rec(1, 2, 1, 1, &[0.5, -0.5, 0.1]),
        ];
        let mut buf = Vec::new();
        write_binary(&mut buf, 3, &records).unwrap();
        assert_eq!(&buf[..5], NEDV_MAGIC);
        let p = EmbeddingProvider::read_binary(&buf[..]).unwrap();
        assert_eq!(p.dim(), 3);
        assert_eq!(p.len(), 2);
        let got = p.get(&records[0].addr()).unwrap();
        assert_eq!(got, records[0].vector.as_slice());
    }

    #[test]
    fn jsonl_round_trip() {
        let records = vec![rec(9, 1, 2, 3, &[3.0, 4.0])];
        let mut buf = Vec::new();
        write_jsonl(&mut buf, &records).unwrap();
        let p = EmbeddingProvider::read_jsonl(&buf[..]).unwrap();
        assert_eq!(p.dim(), 2);
        assert_eq!(p.get(&records[0].addr()).unwrap(), records[0].vector.as_slice());
    }

    #[test]
    fn non_unit_vector_rejected() {
        let bad = EmbeddingRecord {
            key: 1,
            version: 1,
            sentence: 1,
            token: 0,
            vector: vec![1.0, 1.0],
        };
        assert!(matches!(
            EmbeddingProvider::from_records([bad]),
            Err(Error::Embedding(_))
        ));
    }

    #[test]
    fn dimension_mismatch_rejected() {
        let records = vec![rec(1, 1, 1, 0, &[1.0, 0.0]), rec(1, 1, 1, 1, &[1.0, 0.0, 0.0])];
        assert!(matches!(
            EmbeddingProvider::from_records(records),
            Err(Error::Embedding(_))
        ));
    }

    #[test]
    fn bad_magic_rejected() {
        let buf = b"WRONG and some more bytes".to_vec();
        assert!(matches!(
            EmbeddingProvider::read_binary(&buf[..]),
            Err(Error::Embedding(_))
        ));
    }

    #[test]
    fn self_dot_is_one_within_tolerance() {
        let r = rec(1, 1, 1, 0, &[0.3, -0.7, 0.11, 5.0]);
        let p = EmbeddingProvider::from_records([r.clone()]).unwrap();
        let v = p.get(&r.addr()).unwrap();
        let dot: f64 = v.iter().map(|x| f64::from(*x) * f64::from(*x)).sum();
        assert!((dot - 1.0).abs() <= 1e-6);
    }
}
