//! C ABI for the service-rag toolkit: tokenizer word counts, cosine
//! math, the deterministic mock embedder, typo injection, word-level
//! error counts, and read-only index search.
//!
//! Conventions: every fallible function returns an [`SragStatus`] and
//! writes its result through out-parameters. Returned strings are owned
//! by the caller and must be released with [`srag_string_free`]. On any
//! non-zero status, [`srag_last_error_message`] carries a thread-local
//! description until the next call on the same thread.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::path::Path;

use service_rag::corpus::word_count;
use service_rag::eval::{count_errors, inject_typos, TypoInjectorConfig};
use service_rag::index::VectorIndex;
use service_rag::vectors::{
    cosine_distance_slices, cosine_similarity_slices, Embedder, MockEmbedder, MOCK_DIM,
};

/// Status codes returned by every fallible function.
#[repr(i32)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SragStatus {
    /// Success.
    Ok = 0,
    /// A required pointer argument was null.
    NullArgument = 1,
    /// A string argument was not valid UTF-8.
    InvalidUtf8 = 2,
    /// The operation rejected its inputs (dimension mismatch, zero
    /// vector, invalid k, not enough editable words, ...).
    Domain = 3,
    /// The file could not be read, or is not a valid index.
    Io = 4,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn fail(status: SragStatus, message: String) -> SragStatus {
    let sanitized = message.replace('\0', " ");
    LAST_ERROR.with(|slot| {
        *slot.borrow_mut() = CString::new(sanitized).ok();
    });
    status
}

fn ok() -> SragStatus {
    LAST_ERROR.with(|slot| slot.borrow_mut().take());
    SragStatus::Ok
}

/// Message for the most recent failure on this thread, or null after a
/// success. The pointer is only valid until the next call on this thread.
#[no_mangle]
pub extern "C" fn srag_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| {
        slot.borrow().as_ref().map_or(std::ptr::null(), |msg| msg.as_ptr())
    })
}

/// Crate version as a static string; never freed by the caller.
#[no_mangle]
pub extern "C" fn srag_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// Release a string returned through a `char**` out-parameter.
///
/// # Safety
/// `ptr` must be a pointer previously returned by this library and not
/// yet freed; null is accepted and ignored.
#[no_mangle]
pub unsafe extern "C" fn srag_string_free(ptr: *mut c_char) {
    if !ptr.is_null() {
        drop(CString::from_raw(ptr));
    }
}

unsafe fn text_arg<'a>(ptr: *const c_char) -> Result<&'a str, SragStatus> {
    if ptr.is_null() {
        return Err(fail(SragStatus::NullArgument, "text pointer is null".to_string()));
    }
    CStr::from_ptr(ptr)
        .to_str()
        .map_err(|e| fail(SragStatus::InvalidUtf8, format!("invalid UTF-8: {e}")))
}

unsafe fn slice_arg<'a>(ptr: *const f32, len: usize) -> Result<&'a [f32], SragStatus> {
    if ptr.is_null() {
        return Err(fail(SragStatus::NullArgument, "vector pointer is null".to_string()));
    }
    Ok(std::slice::from_raw_parts(ptr, len))
}

fn string_out(out: *mut *mut c_char, value: String) -> SragStatus {
    let cstring = match CString::new(value.replace('\0', " ")) {
        Ok(s) => s,
        Err(e) => return fail(SragStatus::Domain, format!("unencodable result: {e}")),
    };
    unsafe { *out = cstring.into_raw() };
    ok()
}

/// Count whitespace-delimited words in `text`, writing the count to `out`.
///
/// # Safety
/// `text` must be a valid NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn srag_word_count(text: *const c_char, out: *mut usize) -> SragStatus {
    if out.is_null() {
        return fail(SragStatus::NullArgument, "out pointer is null".to_string());
    }
    match text_arg(text) {
        Ok(text) => {
            *out = word_count(text);
            ok()
        }
        Err(status) => status,
    }
}

/// Cosine similarity of two equally sized vectors, in [-1, 1].
///
/// # Safety
/// `a` and `b` must point to `a_len` / `b_len` readable floats; `out`
/// must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn srag_cosine_similarity(
    a: *const f32,
    a_len: usize,
    b: *const f32,
    b_len: usize,
    out: *mut f64,
) -> SragStatus {
    if out.is_null() {
        return fail(SragStatus::NullArgument, "out pointer is null".to_string());
    }
    let (a, b) = match (slice_arg(a, a_len), slice_arg(b, b_len)) {
        (Ok(a), Ok(b)) => (a, b),
        (Err(status), _) | (_, Err(status)) => return status,
    };
    match cosine_similarity_slices(a, b) {
        Ok(sim) => {
            *out = sim;
            ok()
        }
        Err(e) => fail(SragStatus::Domain, e.to_string()),
    }
}

/// Cosine distance (1 - similarity) of two equally sized vectors, in [0, 2].
///
/// # Safety
/// Same contract as [`srag_cosine_similarity`].
#[no_mangle]
pub unsafe extern "C" fn srag_cosine_distance(
    a: *const f32,
    a_len: usize,
    b: *const f32,
    b_len: usize,
    out: *mut f64,
) -> SragStatus {
    if out.is_null() {
        return fail(SragStatus::NullArgument, "out pointer is null".to_string());
    }
    let (a, b) = match (slice_arg(a, a_len), slice_arg(b, b_len)) {
        (Ok(a), Ok(b)) => (a, b),
        (Err(status), _) | (_, Err(status)) => return status,
    };
    match cosine_distance_slices(a, b) {
        Ok(dist) => {
            *out = dist;
            ok()
        }
        Err(e) => fail(SragStatus::Domain, e.to_string()),
    }
}

/// Dimension of vectors produced by the mock embedder.
#[no_mangle]
pub extern "C" fn srag_mock_embedding_dim() -> usize {
    MOCK_DIM
}

/// Embed `text` with the deterministic offline embedder, writing
/// `srag_mock_embedding_dim()` floats to `out`.
///
/// # Safety
/// `text` must be a valid NUL-terminated string; `out` must point to at
/// least `srag_mock_embedding_dim()` writable floats.
#[no_mangle]
pub unsafe extern "C" fn srag_mock_embed(text: *const c_char, out: *mut f32) -> SragStatus {
    if out.is_null() {
        return fail(SragStatus::NullArgument, "out pointer is null".to_string());
    }
    let text = match text_arg(text) {
        Ok(text) => text,
        Err(status) => return status,
    };
    let embedder = MockEmbedder::default();
    match embedder.embed(std::slice::from_ref(&text.to_string())) {
        Ok(mut embeddings) => {
            let embedding = embeddings.pop().expect("one embedding per text");
            std::ptr::copy_nonoverlapping(embedding.values.as_ptr(), out, MOCK_DIM);
            ok()
        }
        Err(e) => fail(SragStatus::Domain, e.to_string()),
    }
}

/// Word-level edit distance between two texts (substitutions,
/// insertions, and deletions over whitespace tokens).
///
/// # Safety
/// `reference` and `candidate` must be valid NUL-terminated strings and
/// `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn srag_count_errors(
    reference: *const c_char,
    candidate: *const c_char,
    out: *mut usize,
) -> SragStatus {
    if out.is_null() {
        return fail(SragStatus::NullArgument, "out pointer is null".to_string());
    }
    let (reference, candidate) = match (text_arg(reference), text_arg(candidate)) {
        (Ok(r), Ok(c)) => (r, c),
        (Err(status), _) | (_, Err(status)) => return status,
    };
    *out = count_errors(reference, candidate);
    ok()
}

/// Corrupt `text` with exactly `error_count` seeded typos and return the
/// corrupted copy through `out` (free with [`srag_string_free`]).
///
/// # Safety
/// `text` must be a valid NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn srag_inject_typos(
    text: *const c_char,
    seed: u64,
    error_count: usize,
    out: *mut *mut c_char,
) -> SragStatus {
    if out.is_null() {
        return fail(SragStatus::NullArgument, "out pointer is null".to_string());
    }
    let text = match text_arg(text) {
        Ok(text) => text,
        Err(status) => return status,
    };
    match inject_typos(text, &TypoInjectorConfig::new(seed, error_count)) {
        Ok((corrupted, _)) => string_out(out, corrupted),
        Err(e) => fail(SragStatus::Domain, e.to_string()),
    }
}

/// An opened vector index. Create with [`srag_index_open`], release with
/// [`srag_index_close`].
pub struct SragIndex {
    inner: VectorIndex,
}

/// Open an index file written by the `service-rag index` command.
///
/// # Safety
/// `path` must be a valid NUL-terminated string and `out` a valid
/// pointer. The returned handle must be released with
/// [`srag_index_close`] exactly once.
#[no_mangle]
pub unsafe extern "C" fn srag_index_open(
    path: *const c_char,
    out: *mut *mut SragIndex,
) -> SragStatus {
    if out.is_null() {
        return fail(SragStatus::NullArgument, "out pointer is null".to_string());
    }
    let path = match text_arg(path) {
        Ok(path) => path,
        Err(status) => return status,
    };
    match VectorIndex::load(Path::new(path)) {
        Ok(inner) => {
            *out = Box::into_raw(Box::new(SragIndex { inner }));
            ok()
        }
        Err(e) => fail(SragStatus::Io, e.to_string()),
    }
}

/// Number of entries in an opened index.
///
/// # Safety
/// `index` must be a live handle from [`srag_index_open`].
#[no_mangle]
pub unsafe extern "C" fn srag_index_len(index: *const SragIndex, out: *mut usize) -> SragStatus {
    if index.is_null() || out.is_null() {
        return fail(SragStatus::NullArgument, "index or out pointer is null".to_string());
    }
    *out = (*index).inner.len();
    ok()
}

/// Embedding dimension of an opened index.
///
/// # Safety
/// `index` must be a live handle from [`srag_index_open`].
#[no_mangle]
pub unsafe extern "C" fn srag_index_dim(index: *const SragIndex, out: *mut usize) -> SragStatus {
    if index.is_null() || out.is_null() {
        return fail(SragStatus::NullArgument, "index or out pointer is null".to_string());
    }
    *out = (*index).inner.dim();
    ok()
}

/// Search an opened index with a raw query vector. The result is a JSON
/// array (free with [`srag_string_free`]) of hits ordered best-first:
/// `[{"incident_id","seq","text","similarity","rank"}]`.
///
/// # Safety
/// `index` must be a live handle, `query` must point to `query_len`
/// readable floats, and `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn srag_index_search(
    index: *const SragIndex,
    query: *const f32,
    query_len: usize,
    k: usize,
    out: *mut *mut c_char,
) -> SragStatus {
    if index.is_null() || out.is_null() {
        return fail(SragStatus::NullArgument, "index or out pointer is null".to_string());
    }
    let query = match slice_arg(query, query_len) {
        Ok(q) => q,
        Err(status) => return status,
    };
    let index = &(*index).inner;
    let query = service_rag::vectors::Embedding::new(query.to_vec(), index.model_id());
    match index.search(&query, k) {
        Ok(hits) => {
            let rows: Vec<serde_json::Value> = hits
                .iter()
                .map(|h| {
                    serde_json::json!({
                        "incident_id": h.chunk.incident_id,
                        "seq": h.chunk.seq,
                        "text": h.chunk.text,
                        "similarity": h.similarity,
                        "rank": h.rank,
                    })
                })
                .collect();
            string_out(out, serde_json::Value::Array(rows).to_string())
        }
        Err(e) => fail(SragStatus::Domain, e.to_string()),
    }
}

/// Release an index handle. Null is accepted and ignored.
///
/// # Safety
/// `index` must be a handle from [`srag_index_open`] not yet closed.
#[no_mangle]
pub unsafe extern "C" fn srag_index_close(index: *mut SragIndex) {
    if !index.is_null() {
        drop(Box::from_raw(index));
    }
}
