//! Exact nearest-neighbour search over trace summaries.
//!
//! Queries are a brute-force cosine scan, O(n·d) per query. Embeddings are
//! stored as `f32`; queries are quantised the same way before scoring, so a
//! query equal to an indexed summary scores exactly 1.
//!
//! Index file layout (integers little-endian):
//!
//! ```text
//! magic[8] | version u8 | dimension u32 | count u64 | fp_len u32 | fingerprint
//! | sha256[32] of everything after it
//! | per record: id_len u32 | id | summary_len u32 | summary | f32 * dimension
//! ```

use std::collections::HashSet;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::backends::{BackendError, Embedder};
use crate::exec::Execution;
use crate::metrics::cosine_similarity;

pub const INDEX_MAGIC: &[u8; 8] = b"SUMMAIDX";
pub const INDEX_VERSION: u8 = 1;

#[derive(Debug, Error)]
pub enum RetrievalError {
    #[error("duplicate trace_id {0}")]
    DuplicateTraceId(String),
    #[error("index was built with {index}, query embedder is {query}")]
    FingerprintMismatch { index: String, query: String },
    #[error("result count must be at least 1")]
    InvalidCount,
    #[error("embedding for {0} has the wrong dimension or zero norm")]
    BadEmbedding(String),
    #[error("index file version {found}, expected {expected}")]
    VersionMismatch { found: u8, expected: u8 },
    #[error("corrupt index: {0}")]
    CorruptIndex(String),
    #[error("{path}: {message}")]
    Io { path: String, message: String },
    #[error(transparent)]
    Backend(#[from] BackendError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRecord {
    pub trace_id: String,
    pub summary: String,
    pub embedding: Vec<f32>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Index {
    pub records: Vec<SummaryRecord>,
    /// 0 for an index built from no records.
    pub dimension: usize,
    pub fingerprint: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueryHit {
    pub rank: usize,
    pub trace_id: String,
    pub summary: String,
    pub score: f64,
}

fn unit_f32(v: &[f64]) -> Option<Vec<f32>> {
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if n == 0.0 || !n.is_finite() {
        return None;
    }
    Some(v.iter().map(|x| (x / n) as f32).collect())
}

pub fn build_index(records: &[(String, String)], embedder: &dyn Embedder) -> Result<Index, RetrievalError> {
    let mut seen = HashSet::new();
    for (id, _) in records {
        if !seen.insert(id.as_str()) {
            return Err(RetrievalError::DuplicateTraceId(id.clone()));
        }
    }
    let summaries: Vec<String> = records.iter().map(|(_, s)| s.clone()).collect();
    let vectors = if summaries.is_empty() {
        Vec::new()
    } else {
        embedder.embed(&summaries)?
    };
    if vectors.len() != records.len() {
        return Err(RetrievalError::BadEmbedding(format!(
            "{} summaries, {} embeddings",
            records.len(),
            vectors.len()
        )));
    }
    let dimension = vectors.first().map_or(0, Vec::len);
    let mut out = Vec::with_capacity(records.len());
    for ((id, summary), v) in records.iter().zip(&vectors) {
        let embedding = unit_f32(v)
            .filter(|e| e.len() == dimension)
            .ok_or_else(|| RetrievalError::BadEmbedding(id.clone()))?;
        out.push(SummaryRecord {
            trace_id: id.clone(),
            summary: summary.clone(),
            embedding,
        });
    }
    Ok(Index {
        records: out,
        dimension,
        fingerprint: embedder.fingerprint(),
    })
}

/// Top-`n` records by cosine similarity to `text`; ties go to the smaller
/// trace id.
pub fn query(
    index: &Index,
    text: &str,
    n: usize,
    embedder: &dyn Embedder,
    exec: Execution,
) -> Result<Vec<QueryHit>, RetrievalError> {
    if n == 0 {
        return Err(RetrievalError::InvalidCount);
    }
    let fp = embedder.fingerprint();
    if fp != index.fingerprint {
        return Err(RetrievalError::FingerprintMismatch {
            index: index.fingerprint.clone(),
            query: fp,
        });
    }
    if index.records.is_empty() {
        return Ok(Vec::new());
    }
    let v = embedder.embed(&[text.to_string()])?;
    let q = v
        .first()
        .and_then(|v| unit_f32(v))
        .filter(|q| q.len() == index.dimension)
        .ok_or_else(|| RetrievalError::BadEmbedding("query".into()))?;
    let scores = exec.map(&index.records, |r| cosine_similarity(&q, &r.embedding).unwrap_or(0.0));
    let mut order: Vec<usize> = (0..index.records.len()).collect();
    order.sort_by(|&a, &b| {
        scores[b]
            .total_cmp(&scores[a])
            .then_with(|| index.records[a].trace_id.cmp(&index.records[b].trace_id))
    });
    Ok(order
        .into_iter()
        .take(n)
        .enumerate()
        .map(|(rank, i)| QueryHit {
            rank: rank + 1,
            trace_id: index.records[i].trace_id.clone(),
            summary: index.records[i].summary.clone(),
            score: scores[i],
        })
        .collect())
}

fn put_str(buf: &mut Vec<u8>, s: &str) {
    buf.extend_from_slice(&(s.len() as u32).to_le_bytes());
    buf.extend_from_slice(s.as_bytes());
}

pub fn encode_index(index: &Index) -> Vec<u8> {
    let mut body = Vec::new();
    for r in &index.records {
        put_str(&mut body, &r.trace_id);
        put_str(&mut body, &r.summary);
        for x in &r.embedding {
            body.extend_from_slice(&x.to_le_bytes());
        }
    }
    let mut out = Vec::with_capacity(body.len() + 64 + index.fingerprint.len());
    out.extend_from_slice(INDEX_MAGIC);
    out.push(INDEX_VERSION);
    out.extend_from_slice(&(index.dimension as u32).to_le_bytes());
    out.extend_from_slice(&(index.records.len() as u64).to_le_bytes());
    put_str(&mut out, &index.fingerprint);
    out.extend_from_slice(&Sha256::digest(&body));
    out.extend_from_slice(&body);
    out
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], RetrievalError> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.buf.len())
            .ok_or_else(|| RetrievalError::CorruptIndex("unexpected end of file".into()))?;
        let s = &self.buf[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32, RetrievalError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn string(&mut self) -> Result<String, RetrievalError> {
        let n = self.u32()? as usize;
        String::from_utf8(self.take(n)?.to_vec()).map_err(|e| RetrievalError::CorruptIndex(e.to_string()))
    }
}

pub fn decode_index(buf: &[u8]) -> Result<Index, RetrievalError> {
    let mut r = Reader { buf, pos: 0 };
    if r.take(8)? != INDEX_MAGIC {
        return Err(RetrievalError::CorruptIndex("bad magic".into()));
    }
    let version = r.take(1)?[0];
    if version != INDEX_VERSION {
        return Err(RetrievalError::VersionMismatch {
            found: version,
            expected: INDEX_VERSION,
        });
    }
    let dimension = r.u32()? as usize;
    let count = u64::from_le_bytes(r.take(8)?.try_into().unwrap()) as usize;
    let fingerprint = r.string()?;
    let checksum = r.take(32)?;
    if Sha256::digest(&buf[r.pos..]).as_slice() != checksum {
        return Err(RetrievalError::CorruptIndex("checksum mismatch".into()));
    }
    let mut records = Vec::with_capacity(count.min(1 << 20));
    for _ in 0..count {
        let trace_id = r.string()?;
        let summary = r.string()?;
        let raw = r.take(dimension * 4)?;
        let embedding = raw
            .chunks_exact(4)
            .map(|b| f32::from_le_bytes(b.try_into().unwrap()))
            .collect();
        records.push(SummaryRecord {
            trace_id,
            summary,
            embedding,
        });
    }
    if r.pos != buf.len() {
        return Err(RetrievalError::CorruptIndex("trailing bytes".into()));
    }
    Ok(Index {
        records,
        dimension,
        fingerprint,
    })
}

pub fn save_index(index: &Index, path: &Path) -> Result<(), RetrievalError> {
    std::fs::write(path, encode_index(index)).map_err(|e| RetrievalError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })
}

pub fn load_index(path: &Path) -> Result<Index, RetrievalError> {
    let buf = std::fs::read(path).map_err(|e| RetrievalError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    decode_index(&buf)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::backends::{MockBackend, MOCK_DIMENSION};
    use proptest::prelude::*;

    fn recs(items: &[(&str, &str)]) -> Vec<(String, String)> {
        items.iter().map(|(a, b)| (a.to_string(), b.to_string())).collect()
    }

    fn mock() -> MockBackend {
        MockBackend::new(vec![])
    }

    #[test]
    fn build_and_self_query() {
        let r = recs(&[
            ("t1", "buy red shoes"),
            ("t2", "book a flight to paris"),
            ("t3", "order sushi"),
        ]);
        let idx = build_index(&r, &mock()).unwrap();
        assert_eq!(idx.dimension, MOCK_DIMENSION);
        let hits = query(&idx, "book a flight to paris", 2, &mock(), Execution::Sequential).unwrap();
        assert_eq!(hits.len(), 2);
        assert_eq!(hits[0].trace_id, "t2");
        assert_eq!(hits[0].score, 1.0);
        assert!(hits[0].score >= hits[1].score);
    }

    #[test]
    fn edge_cases() {
        let dup = recs(&[("t1", "a"), ("t1", "b")]);
        assert!(matches!(build_index(&dup, &mock()), Err(RetrievalError::DuplicateTraceId(id)) if id == "t1"));
        let empty = build_index(&[], &mock()).unwrap();
        assert!(query(&empty, "x", 3, &mock(), Execution::Sequential)
            .unwrap()
            .is_empty());
        assert!(matches!(
            query(&empty, "x", 0, &mock(), Execution::Sequential),
            Err(RetrievalError::InvalidCount)
        ));
        let other = Index {
            fingerprint: "other".into(),
            ..empty
        };
        assert!(matches!(
            query(&other, "x", 1, &mock(), Execution::Sequential),
            Err(RetrievalError::FingerprintMismatch { .. })
        ));
    }

    #[test]
    fn ties_by_trace_id() {
        let r = recs(&[("b", "flight to rome"), ("a", "rome to flight"), ("c", "unrelated")]);
        let idx = build_index(&r, &mock()).unwrap();
        let hits = query(&idx, "flight rome", 3, &mock(), Execution::Sequential).unwrap();
        assert_eq!(hits[0].trace_id, "a");
        assert_eq!(hits[1].trace_id, "b");
        assert_eq!(hits[0].score, hits[1].score);
    }

    #[test]
    fn damaged_files() {
        let idx = build_index(&recs(&[("t1", "a b"), ("t2", "c d")]), &mock()).unwrap();
        let bytes = encode_index(&idx);
        assert_eq!(decode_index(&bytes).unwrap(), idx);
        assert!(matches!(
            decode_index(&bytes[..bytes.len() - 5]),
            Err(RetrievalError::CorruptIndex(_))
        ));
        let mut old = bytes.clone();
        old[8] = 0;
        assert!(matches!(
            decode_index(&old),
            Err(RetrievalError::VersionMismatch { found: 0, .. })
        ));
        let mut flipped = bytes;
        let last = flipped.len() - 1;
        flipped[last] ^= 1;
        assert!(matches!(decode_index(&flipped), Err(RetrievalError::CorruptIndex(_))));
    }

    proptest! {
        #[test]
        fn persistence_lossless(rows in prop::collection::vec(("[a-z]{1,8}", ".{0,20}", prop::collection::vec(-1.0f32..1.0, 3)), 0..12)) {
            let mut seen = HashSet::new();
            let records: Vec<SummaryRecord> = rows
                .into_iter()
                .filter(|(id, _, _)| seen.insert(id.clone()))
                .map(|(trace_id, summary, embedding)| SummaryRecord { trace_id, summary, embedding })
                .collect();
            let idx = Index { dimension: 3, records, fingerprint: "fp:é".into() };
            prop_assert_eq!(decode_index(&encode_index(&idx)).unwrap(), idx);
        }
    }
}
