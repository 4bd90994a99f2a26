//! Exact brute-force vector index over (chunk, embedding) entries with
//! binary persistence. Corpora here are tiny (tens of incidents), so a
//! full scan is both exact and fast, and keeps every retrieval metric
//! deterministic.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use thiserror::Error;

use crate::corpus::Chunk;
use crate::vectors::{cosine_similarity_slices, Embedding, VectorError};

const INDEX_MAGIC: &[u8; 4] = b"SRIX";
const INDEX_VERSION: u16 = 1;

#[derive(Debug, Error)]
pub enum IndexError {
    #[error("index expects {expected}-dimensional embeddings, got {got}")]
    DimMismatch { expected: usize, got: usize },
    #[error("index was built with model \"{expected}\", got \"{got}\"")]
    ModelMismatch { expected: String, got: String },
    #[error("chunks and embeddings differ in length: {chunks} vs {embeddings}")]
    LengthMismatch { chunks: usize, embeddings: usize },
    #[error("k must be at least 1")]
    InvalidK,
    #[error("cannot {action} {path}: {source}")]
    Io {
        action: &'static str,
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: corrupt index: {message}")]
    Corrupt { path: String, message: String },
    #[error("{path}: unsupported index version {found} (this build reads version {expected})")]
    VersionMismatch { path: String, found: u16, expected: u16 },
    #[error(transparent)]
    Vector(#[from] VectorError),
}

/// One indexed chunk with its embedding and insertion-order id.
#[derive(Debug, Clone)]
pub struct IndexEntry {
    pub entry_id: u64,
    pub chunk: Chunk,
    pub embedding: Embedding,
}

/// A scored search result.
#[derive(Debug, Clone)]
pub struct RetrievalHit {
    pub chunk: Chunk,
    pub similarity: f64,
    /// 1-based rank within the result list.
    pub rank: usize,
}

/// Brute-force cosine k-NN index. All entries share one model id and
/// dimension; entry ids record insertion order and break similarity ties.
#[derive(Debug, Clone)]
pub struct VectorIndex {
    model_id: String,
    dim: usize,
    entries: Vec<IndexEntry>,
}

impl VectorIndex {
    pub fn new(model_id: impl Into<String>, dim: usize) -> Self {
        VectorIndex { model_id: model_id.into(), dim, entries: Vec::new() }
    }

    pub fn model_id(&self) -> &str {
        &self.model_id
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> impl Iterator<Item = &IndexEntry> {
        self.entries.iter()
    }

    /// Incident ids in first-seen entry order.
    pub fn incident_ids(&self) -> Vec<String> {
        let mut seen = std::collections::HashSet::new();
        let mut out = Vec::new();
        for e in &self.entries {
            if seen.insert(e.chunk.incident_id.as_str()) {
                out.push(e.chunk.incident_id.clone());
            }
        }
        out
    }

    /// Append chunk/embedding pairs. Every embedding must match the
    /// index's model id and dimension.
    pub fn add(&mut self, chunks: Vec<Chunk>, embeddings: Vec<Embedding>) -> Result<(), IndexError> {
        if chunks.len() != embeddings.len() {
            return Err(IndexError::LengthMismatch {
                chunks: chunks.len(),
                embeddings: embeddings.len(),
            });
        }
        for e in &embeddings {
            if e.dim != self.dim {
                return Err(IndexError::DimMismatch { expected: self.dim, got: e.dim });
            }
            if e.model_id != self.model_id {
                return Err(IndexError::ModelMismatch {
                    expected: self.model_id.clone(),
                    got: e.model_id.clone(),
                });
            }
        }
        for (chunk, embedding) in chunks.into_iter().zip(embeddings) {
            self.entries.push(IndexEntry {
                entry_id: self.entries.len() as u64,
                chunk,
                embedding,
            });
        }
        Ok(())
    }

    fn scored(&self, query: &Embedding) -> Result<Vec<(f64, usize)>, IndexError> {
        if query.dim != self.dim {
            return Err(IndexError::DimMismatch { expected: self.dim, got: query.dim });
        }
        let mut scored = Vec::with_capacity(self.entries.len());
        for (i, e) in self.entries.iter().enumerate() {
            let sim = cosine_similarity_slices(&query.values, &e.embedding.values)?;
            scored.push((sim, i));
        }
        Ok(scored)
    }

    /// Top-`min(k, len)` entries by cosine similarity, descending; ties go
    /// to the earlier-inserted entry. An empty index yields an empty list.
    pub fn search(&self, query: &Embedding, k: usize) -> Result<Vec<RetrievalHit>, IndexError> {
        if k == 0 {
            return Err(IndexError::InvalidK);
        }
        if self.entries.is_empty() {
            return Ok(Vec::new());
        }
        let mut scored = self.scored(query)?;
        scored.sort_by(|a, b| {
            b.0.partial_cmp(&a.0)
                .expect("similarities are clamped, never NaN")
                .then(self.entries[a.1].entry_id.cmp(&self.entries[b.1].entry_id))
        });
        Ok(scored
            .into_iter()
            .take(k)
            .enumerate()
            .map(|(i, (sim, idx))| RetrievalHit {
                chunk: self.entries[idx].chunk.clone(),
                similarity: sim,
                rank: i + 1,
            })
            .collect())
    }

    /// Minimum cosine distance from the query to each incident's chunks.
    pub fn nearest_distance_per_incident(
        &self,
        query: &Embedding,
    ) -> Result<BTreeMap<String, f64>, IndexError> {
        let scored = self.scored(query)?;
        let mut out: BTreeMap<String, f64> = BTreeMap::new();
        for (sim, idx) in scored {
            let dist = 1.0 - sim;
            let id = &self.entries[idx].chunk.incident_id;
            match out.get_mut(id) {
                Some(best) => {
                    if dist < *best {
                        *best = dist;
                    }
                }
                None => {
                    out.insert(id.clone(), dist);
                }
            }
        }
        Ok(out)
    }

    /// Write the index to disk (temp file + rename). Format: `SRIX`,
    /// u16 version, model id, u32 dim, u64 count, entries, trailing CRC32.
    pub fn save(&self, path: &Path) -> Result<(), IndexError> {
        let mut buf = Vec::new();
        buf.extend_from_slice(INDEX_MAGIC);
        buf.extend_from_slice(&INDEX_VERSION.to_le_bytes());
        write_string(&mut buf, &self.model_id);
        buf.extend_from_slice(&(self.dim as u32).to_le_bytes());
        buf.extend_from_slice(&(self.entries.len() as u64).to_le_bytes());
        for e in &self.entries {
            write_string(&mut buf, &e.chunk.incident_id);
            buf.extend_from_slice(&(e.chunk.seq as u64).to_le_bytes());
            buf.extend_from_slice(&(e.chunk.token_start as u64).to_le_bytes());
            buf.extend_from_slice(&(e.chunk.token_end as u64).to_le_bytes());
            write_string(&mut buf, &e.chunk.text);
            for v in &e.embedding.values {
                buf.extend_from_slice(&v.to_le_bytes());
            }
        }
        buf.extend_from_slice(&crc32fast::hash(&buf).to_le_bytes());
        let display = path.display().to_string();
        let io_err = |action, source| IndexError::Io { action, path: display.clone(), source };
        let tmp = path.with_extension("tmp");
        fs::write(&tmp, &buf).map_err(|e| io_err("write", e))?;
        fs::rename(&tmp, path).map_err(|e| io_err("rename into", e))
    }

    /// Read an index back from disk, verifying magic, version, and checksum.
    pub fn load(path: &Path) -> Result<VectorIndex, IndexError> {
        let display = path.display().to_string();
        let bytes = fs::read(path).map_err(|source| IndexError::Io {
            action: "read",
            path: display.clone(),
            source,
        })?;
        let corrupt = |message: &str| IndexError::Corrupt {
            path: display.clone(),
            message: message.to_string(),
        };
        if bytes.len() < 10 {
            return Err(corrupt("file too short"));
        }
        if &bytes[0..4] != INDEX_MAGIC {
            return Err(corrupt("bad magic, not an index file"));
        }
        let version = u16::from_le_bytes(bytes[4..6].try_into().unwrap());
        if version != INDEX_VERSION {
            return Err(IndexError::VersionMismatch {
                path: display,
                found: version,
                expected: INDEX_VERSION,
            });
        }
        let (payload, tail) = bytes.split_at(bytes.len() - 4);
        let stored_crc = u32::from_le_bytes(tail.try_into().unwrap());
        if crc32fast::hash(payload) != stored_crc {
            return Err(corrupt("checksum mismatch (truncated or damaged file)"));
        }
        let mut r = Reader { buf: payload, pos: 6, path: &display };
        let model_id = r.string()?;
        let dim = r.u32()? as usize;
        let count = r.u64()?;
        let mut index = VectorIndex::new(model_id, dim);
        for _ in 0..count {
            let incident_id = r.string()?;
            let seq = r.u64()? as usize;
            let token_start = r.u64()? as usize;
            let token_end = r.u64()? as usize;
            let text = r.string()?;
            let mut values = Vec::with_capacity(dim);
            for _ in 0..dim {
                values.push(f32::from_le_bytes(r.take(4)?.try_into().unwrap()));
            }
            index.entries.push(IndexEntry {
                entry_id: index.entries.len() as u64,
                chunk: Chunk { incident_id, seq, text, token_start, token_end },
                embedding: Embedding::new(values, &index.model_id),
            });
        }
        if r.pos != payload.len() {
            return Err(corrupt("trailing bytes after last entry"));
        }
        Ok(index)
    }

    /// `load`, then verify the index was built with the expected model.
    pub fn load_checked(path: &Path, expected_model: &str) -> Result<VectorIndex, IndexError> {
        let index = Self::load(path)?;
        if index.model_id != expected_model {
            return Err(IndexError::ModelMismatch {
                expected: expected_model.to_string(),
                got: index.model_id,
            });
        }
        Ok(index)
    }
}

fn write_string(buf: &mut Vec<u8>, s: &str) {
    buf.extend_from_slice(&(s.len() as u32).to_le_bytes());
    buf.extend_from_slice(s.as_bytes());
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
    path: &'a str,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], IndexError> {
        if self.pos + n > self.buf.len() {
            return Err(IndexError::Corrupt {
                path: self.path.to_string(),
                message: "unexpected end of data".to_string(),
            });
        }
        let slice = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(slice)
    }

    fn u32(&mut self) -> Result<u32, IndexError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64, IndexError> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn string(&mut self) -> Result<String, IndexError> {
        let len = self.u32()? as usize;
        let bytes = self.take(len)?;
        String::from_utf8(bytes.to_vec()).map_err(|_| IndexError::Corrupt {
            path: self.path.to_string(),
            message: "invalid UTF-8 in string field".to_string(),
        })
    }
}
