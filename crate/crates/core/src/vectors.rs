//! Embedding providers (remote OpenAI-compatible or deterministic mock),
//! a content-addressed embedding cache, and cosine similarity/distance.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Duration;

use serde::Deserialize;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::net::{self, HttpError};

/// Dimension of the mock embedder's vectors.
pub const MOCK_DIM: usize = 256;
/// Default model id reported by the mock embedder.
pub const MOCK_MODEL_ID: &str = "mock-256";

const CACHE_MAGIC: &[u8; 4] = b"SRV1";

#[derive(Debug, Error)]
pub enum VectorError {
    #[error("dimension mismatch: {a} vs {b}")]
    DimMismatch { a: usize, b: usize },
    #[error("cosine is undefined for a zero-norm vector")]
    ZeroNorm,
    #[error("input text {index} is empty")]
    EmptyText { index: usize },
    #[error("remote embedding provider needs an endpoint URL (config or {})", net::BASE_URL_ENV)]
    MissingEndpoint,
    #[error("remote provider needs an API key in {}", net::API_KEY_ENV)]
    MissingApiKey,
    #[error("embedding provider call failed: {0}")]
    Provider(#[from] HttpError),
    #[error("unusable embedding response: {message}")]
    BadResponse { message: String },
}

/// A fixed-dimension vector labeled with the model that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct Embedding {
    pub values: Vec<f32>,
    pub dim: usize,
    pub model_id: String,
}

impl Embedding {
    pub fn new(values: Vec<f32>, model_id: impl Into<String>) -> Self {
        let dim = values.len();
        Embedding { values, dim, model_id: model_id.into() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProviderKind {
    Remote,
    Mock,
}

/// How to reach an embedding provider.
#[derive(Debug, Clone)]
pub struct ProviderConfig {
    pub kind: ProviderKind,
    pub endpoint_url: Option<String>,
    pub model_name: String,
    pub batch_size: usize,
    pub timeout: Duration,
    pub max_retries: u32,
}

impl ProviderConfig {
    pub fn mock() -> Self {
        ProviderConfig {
            kind: ProviderKind::Mock,
            endpoint_url: None,
            model_name: MOCK_MODEL_ID.to_string(),
            batch_size: 16,
            timeout: Duration::from_secs(30),
            max_retries: 3,
        }
    }

    pub fn remote(endpoint_url: impl Into<String>, model_name: impl Into<String>) -> Self {
        ProviderConfig {
            kind: ProviderKind::Remote,
            endpoint_url: Some(endpoint_url.into()),
            model_name: model_name.into(),
            batch_size: 16,
            timeout: Duration::from_secs(30),
            max_retries: 3,
        }
    }
}

fn dots(a: &[f32], b: &[f32]) -> (f64, f64, f64) {
    let mut ab = 0.0f64;
    let mut aa = 0.0f64;
    let mut bb = 0.0f64;
    for i in 0..a.len() {
        let x = a[i] as f64;
        let y = b[i] as f64;
        ab += x * y;
        aa += x * x;
        bb += y * y;
    }
    (ab, aa, bb)
}

/// Cosine similarity over raw slices, accumulated in f64 and clamped to
/// [-1, 1]. Computed as dot(a,b)/sqrt(dot(a,a)*dot(b,b)) so that
/// sim(a, a) is exactly 1 and sim(a, -a) is exactly -1.
pub fn cosine_similarity_slices(a: &[f32], b: &[f32]) -> Result<f64, VectorError> {
    if a.len() != b.len() {
        return Err(VectorError::DimMismatch { a: a.len(), b: b.len() });
    }
    let (ab, aa, bb) = dots(a, b);
    if aa == 0.0 || bb == 0.0 {
        return Err(VectorError::ZeroNorm);
    }
    Ok((ab / (aa * bb).sqrt()).clamp(-1.0, 1.0))
}

/// Cosine distance in [0, 2]: literally `1 - cosine_similarity`.
pub fn cosine_distance_slices(a: &[f32], b: &[f32]) -> Result<f64, VectorError> {
    Ok(1.0 - cosine_similarity_slices(a, b)?)
}

pub fn cosine_similarity(a: &Embedding, b: &Embedding) -> Result<f64, VectorError> {
    cosine_similarity_slices(&a.values, &b.values)
}

pub fn cosine_distance(a: &Embedding, b: &Embedding) -> Result<f64, VectorError> {
    Ok(1.0 - cosine_similarity(a, b)?)
}

/// Anything that can turn texts into embeddings.
pub trait Embedder: Send + Sync {
    fn model_id(&self) -> &str;
    /// One embedding per input text, in input order.
    fn embed(&self, texts: &[String]) -> Result<Vec<Embedding>, VectorError>;
}

impl<T: Embedder + ?Sized> Embedder for Box<T> {
    fn model_id(&self) -> &str {
        (**self).model_id()
    }

    fn embed(&self, texts: &[String]) -> Result<Vec<Embedding>, VectorError> {
        (**self).embed(texts)
    }
}

fn check_nonempty(texts: &[String]) -> Result<(), VectorError> {
    for (index, t) in texts.iter().enumerate() {
        if t.trim().is_empty() {
            return Err(VectorError::EmptyText { index });
        }
    }
    Ok(())
}

/// FNV-1a 64-bit; chosen over std's DefaultHasher because the mock
/// embedder must be stable across platforms and releases.
fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf29ce484222325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x100000001b3);
    }
    h
}

/// Stable 64-bit token hash for bucketing: FNV-1a plus a murmur-style
/// finalizer. The finalizer matters: the low byte of raw FNV-1a is an
/// invertible function of the low input bytes, so near-identical tokens
/// ("item2x" vs "item5x") land in correlated buckets without it.
fn token_hash(bytes: &[u8]) -> u64 {
    let mut h = fnv1a64(bytes);
    h ^= h >> 33;
    h = h.wrapping_mul(0xff51afd7ed558ccd);
    h ^= h >> 33;
    h = h.wrapping_mul(0xc4ceb9fe1a85ec53);
    h ^ (h >> 33)
}

/// Deterministic offline embedder: bag-of-tokens hashed into 256 buckets
/// (finalized FNV-1a mod 256, +1 per token), then L2-normalized. Texts
/// sharing vocabulary land near each other, which is all the retrieval
/// metrics need.
#[derive(Debug, Clone)]
pub struct MockEmbedder {
    model_id: String,
}

impl Default for MockEmbedder {
    fn default() -> Self {
        MockEmbedder { model_id: MOCK_MODEL_ID.to_string() }
    }
}

impl MockEmbedder {
    pub fn new(model_id: impl Into<String>) -> Self {
        MockEmbedder { model_id: model_id.into() }
    }

    fn embed_one(&self, text: &str) -> Embedding {
        let mut buckets = [0.0f64; MOCK_DIM];
        for t in crate::corpus::tokenize(text) {
            let idx = (token_hash(t.text.as_bytes()) % MOCK_DIM as u64) as usize;
            buckets[idx] += 1.0;
        }
        let norm = buckets.iter().map(|v| v * v).sum::<f64>().sqrt();
        let values = buckets.iter().map(|v| (v / norm) as f32).collect();
        Embedding::new(values, &self.model_id)
    }
}

impl Embedder for MockEmbedder {
    fn model_id(&self) -> &str {
        &self.model_id
    }

    fn embed(&self, texts: &[String]) -> Result<Vec<Embedding>, VectorError> {
        check_nonempty(texts)?;
        Ok(texts.iter().map(|t| self.embed_one(t)).collect())
    }
}

/// OpenAI-compatible `/embeddings` client.
pub struct RemoteEmbedder {
    base_url: String,
    api_key: String,
    model_name: String,
    batch_size: usize,
    max_retries: u32,
    agent: ureq::Agent,
}

impl std::fmt::Debug for RemoteEmbedder {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("RemoteEmbedder")
            .field("base_url", &self.base_url)
            .field("api_key", &"<redacted>")
            .field("model_name", &self.model_name)
            .field("batch_size", &self.batch_size)
            .field("max_retries", &self.max_retries)
            .finish()
    }
}

impl RemoteEmbedder {
    pub fn from_config(cfg: &ProviderConfig) -> Result<Self, VectorError> {
        let base_url = net::effective_base_url(cfg.endpoint_url.as_deref())
            .ok_or(VectorError::MissingEndpoint)?;
        let api_key = net::api_key().ok_or(VectorError::MissingApiKey)?;
        Ok(RemoteEmbedder {
            base_url: base_url.trim_end_matches('/').to_string(),
            api_key,
            model_name: cfg.model_name.clone(),
            batch_size: cfg.batch_size.max(1),
            max_retries: cfg.max_retries,
            agent: net::build_agent(cfg.timeout),
        })
    }
}

#[derive(Deserialize)]
struct EmbeddingsResponse {
    data: Vec<EmbeddingItem>,
}

#[derive(Deserialize)]
struct EmbeddingItem {
    embedding: Vec<f32>,
    #[serde(default)]
    index: Option<usize>,
}

impl Embedder for RemoteEmbedder {
    fn model_id(&self) -> &str {
        &self.model_name
    }

    fn embed(&self, texts: &[String]) -> Result<Vec<Embedding>, VectorError> {
        check_nonempty(texts)?;
        let url = format!("{}/embeddings", self.base_url);
        let mut out = Vec::with_capacity(texts.len());
        let mut expected_dim = None;
        for batch in texts.chunks(self.batch_size) {
            let body = serde_json::json!({ "model": self.model_name, "input": batch });
            let value = net::post_json(&self.agent, &url, &self.api_key, &body, self.max_retries)?;
            let mut resp: EmbeddingsResponse =
                serde_json::from_value(value).map_err(|e| VectorError::BadResponse {
                    message: e.to_string(),
                })?;
            if resp.data.len() != batch.len() {
                return Err(VectorError::BadResponse {
                    message: format!("asked for {} embeddings, got {}", batch.len(), resp.data.len()),
                });
            }
            if resp.data.iter().all(|d| d.index.is_some()) {
                resp.data.sort_by_key(|d| d.index.unwrap());
            }
            for item in resp.data {
                let dim = item.embedding.len();
                if item.embedding.iter().any(|v| !v.is_finite()) {
                    return Err(VectorError::BadResponse {
                        message: "non-finite value in embedding".to_string(),
                    });
                }
                match expected_dim {
                    None => expected_dim = Some(dim),
                    Some(d) if d != dim => {
                        return Err(VectorError::BadResponse {
                            message: format!("inconsistent dimensions {d} and {dim}"),
                        })
                    }
                    _ => {}
                }
                out.push(Embedding::new(item.embedding, &self.model_name));
            }
        }
        Ok(out)
    }
}

/// Embed texts with a provider built from the config.
pub fn embed_texts(texts: &[String], cfg: &ProviderConfig) -> Result<Vec<Embedding>, VectorError> {
    match cfg.kind {
        ProviderKind::Mock => MockEmbedder::new(&cfg.model_name).embed(texts),
        ProviderKind::Remote => RemoteEmbedder::from_config(cfg)?.embed(texts),
    }
}

/// Embed a large batch using up to `parallelism` concurrent `embed`
/// calls over contiguous slabs, preserving input order. Values of 0 or
/// 1 (or fewer texts than workers) degrade to one plain call.
pub fn embed_with_parallelism(
    embedder: &dyn Embedder,
    texts: &[String],
    parallelism: usize,
) -> Result<Vec<Embedding>, VectorError> {
    check_nonempty(texts)?;
    let workers = parallelism.clamp(1, texts.len().max(1));
    if workers <= 1 {
        return embedder.embed(texts);
    }
    let slab = texts.len().div_ceil(workers);
    std::thread::scope(|scope| {
        let handles: Vec<_> = texts
            .chunks(slab)
            .map(|part| scope.spawn(move || embedder.embed(part)))
            .collect();
        let mut out = Vec::with_capacity(texts.len());
        for handle in handles {
            out.extend(handle.join().expect("embed worker panicked")?);
        }
        Ok(out)
    })
}

fn sanitize_model_id(model_id: &str) -> String {
    let cleaned: String = model_id
        .chars()
        .map(|c| if c.is_alphanumeric() || "-_.".contains(c) { c } else { '_' })
        .collect();
    if cleaned.is_empty() {
        "_".to_string()
    } else {
        cleaned
    }
}

fn cache_entry_path(dir: &Path, model_id: &str, text: &str) -> PathBuf {
    let digest = Sha256::digest(text.as_bytes());
    let hex: String = digest.iter().map(|b| format!("{b:02x}")).collect();
    dir.join(sanitize_model_id(model_id)).join(format!("{hex}.vec"))
}

/// Look up a cached embedding by (model, content hash). Corrupt entries
/// are treated as misses with a warning.
pub fn cache_get(dir: &Path, model_id: &str, text: &str) -> Option<Embedding> {
    let path = cache_entry_path(dir, model_id, text);
    let bytes = fs::read(&path).ok()?;
    match decode_cache_entry(&bytes) {
        Some(values) => Some(Embedding::new(values, model_id)),
        None => {
            log::warn!("corrupt cache entry {}, treating as miss", path.display());
            None
        }
    }
}

fn decode_cache_entry(bytes: &[u8]) -> Option<Vec<f32>> {
    if bytes.len() < 8 || &bytes[0..4] != CACHE_MAGIC {
        return None;
    }
    let dim = u32::from_le_bytes(bytes[4..8].try_into().ok()?) as usize;
    if bytes.len() != 8 + dim * 4 {
        return None;
    }
    let values = bytes[8..]
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
        .collect();
    Some(values)
}

/// Store an embedding under (model, content hash). Writes are atomic
/// (temp file + rename), so concurrent writers settle on last-writer-wins.
pub fn cache_put(dir: &Path, model_id: &str, text: &str, emb: &Embedding) -> std::io::Result<()> {
    let path = cache_entry_path(dir, model_id, text);
    let parent = path.parent().expect("cache entry path has a parent");
    fs::create_dir_all(parent)?;
    let mut buf = Vec::with_capacity(8 + emb.values.len() * 4);
    buf.extend_from_slice(CACHE_MAGIC);
    buf.extend_from_slice(&(emb.dim as u32).to_le_bytes());
    for v in &emb.values {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    let tmp = tempfile_in(parent)?;
    fs::write(&tmp, &buf)?;
    fs::rename(&tmp, &path)
}

fn tempfile_in(dir: &Path) -> std::io::Result<PathBuf> {
    use std::time::{SystemTime, UNIX_EPOCH};
    let nanos = SystemTime::now().duration_since(UNIX_EPOCH).unwrap_or_default().as_nanos();
    Ok(dir.join(format!(".tmp-{}-{nanos}", std::process::id())))
}

/// Wraps an embedder with the on-disk cache; only misses reach the inner
/// provider.
pub struct CachedEmbedder<E: Embedder> {
    inner: E,
    dir: PathBuf,
}

impl<E: Embedder> CachedEmbedder<E> {
    pub fn new(inner: E, dir: impl Into<PathBuf>) -> Self {
        CachedEmbedder { inner, dir: dir.into() }
    }
}

impl<E: Embedder> Embedder for CachedEmbedder<E> {
    fn model_id(&self) -> &str {
        self.inner.model_id()
    }

    fn embed(&self, texts: &[String]) -> Result<Vec<Embedding>, VectorError> {
        check_nonempty(texts)?;
        let model_id = self.inner.model_id().to_string();
        let mut out: Vec<Option<Embedding>> = texts
            .iter()
            .map(|t| cache_get(&self.dir, &model_id, t))
            .collect();
        let missing: Vec<usize> =
            out.iter().enumerate().filter(|(_, e)| e.is_none()).map(|(i, _)| i).collect();
        if !missing.is_empty() {
            let batch: Vec<String> = missing.iter().map(|&i| texts[i].clone()).collect();
            let fresh = self.inner.embed(&batch)?;
            for (&slot, emb) in missing.iter().zip(fresh) {
                if let Err(e) = cache_put(&self.dir, &model_id, &texts[slot], &emb) {
                    log::warn!("cache write failed for {}: {e}", self.dir.display());
                }
                out[slot] = Some(emb);
            }
        }
        Ok(out.into_iter().map(|e| e.expect("every slot filled")).collect())
    }
}
