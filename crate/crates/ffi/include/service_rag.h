/* C API for the service-rag toolkit. Generated by cbindgen; do not edit. */

#ifndef SERVICE_RAG_H
#define SERVICE_RAG_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Status codes returned by every fallible function.
enum SragStatus
#if defined(__cplusplus) || __STDC_VERSION__ >= 202311L
  : int32_t
#endif // defined(__cplusplus) || __STDC_VERSION__ >= 202311L
 {
  // Success.
  SRAG_STATUS_OK = 0,
  // A required pointer argument was null.
  SRAG_STATUS_NULL_ARGUMENT = 1,
  // A string argument was not valid UTF-8.
  SRAG_STATUS_INVALID_UTF8 = 2,
  // The operation rejected its inputs (dimension mismatch, zero
  // vector, invalid k, not enough editable words, ...).
  SRAG_STATUS_DOMAIN = 3,
  // The file could not be read, or is not a valid index.
  SRAG_STATUS_IO = 4,
};
#ifndef __cplusplus
#if __STDC_VERSION__ >= 202311L
typedef enum SragStatus SragStatus;
#else
typedef int32_t SragStatus;
#endif // __STDC_VERSION__ >= 202311L
#endif // __cplusplus

// An opened vector index. Create with [`srag_index_open`], release with
// [`srag_index_close`].
typedef struct SragIndex SragIndex;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message for the most recent failure on this thread, or null after a
// success. The pointer is only valid until the next call on this thread.
const char *srag_last_error_message(void);

// Crate version as a static string; never freed by the caller.
const char *srag_version(void);

// Release a string returned through a `char**` out-parameter.
//
// # Safety
// `ptr` must be a pointer previously returned by this library and not
// yet freed; null is accepted and ignored.
void srag_string_free(char *ptr);

// Count whitespace-delimited words in `text`, writing the count to `out`.
//
// # Safety
// `text` must be a valid NUL-terminated string and `out` a valid pointer.
SragStatus srag_word_count(const char *text, size_t *out);

// Cosine similarity of two equally sized vectors, in [-1, 1].
//
// # Safety
// `a` and `b` must point to `a_len` / `b_len` readable floats; `out`
// must be a valid pointer.
SragStatus srag_cosine_similarity(const float *a,
                                  size_t a_len,
                                  const float *b,
                                  size_t b_len,
                                  double *out);

// Cosine distance (1 - similarity) of two equally sized vectors, in [0, 2].
//
// # Safety
// Same contract as [`srag_cosine_similarity`].
SragStatus srag_cosine_distance(const float *a,
                                size_t a_len,
                                const float *b,
                                size_t b_len,
                                double *out);

// Dimension of vectors produced by the mock embedder.
size_t srag_mock_embedding_dim(void);

// Embed `text` with the deterministic offline embedder, writing
// `srag_mock_embedding_dim()` floats to `out`.
//
// # Safety
// `text` must be a valid NUL-terminated string; `out` must point to at
// least `srag_mock_embedding_dim()` writable floats.
SragStatus srag_mock_embed(const char *text, float *out);

// Word-level edit distance between two texts (substitutions,
// insertions, and deletions over whitespace tokens).
//
// # Safety
// `reference` and `candidate` must be valid NUL-terminated strings and
// `out` a valid pointer.
SragStatus srag_count_errors(const char *reference, const char *candidate, size_t *out);

// Corrupt `text` with exactly `error_count` seeded typos and return the
// corrupted copy through `out` (free with [`srag_string_free`]).
//
// # Safety
// `text` must be a valid NUL-terminated string and `out` a valid pointer.
SragStatus srag_inject_typos(const char *text, uint64_t seed, size_t error_count, char **out);

// Open an index file written by the `service-rag index` command.
//
// # Safety
// `path` must be a valid NUL-terminated string and `out` a valid
// pointer. The returned handle must be released with
// [`srag_index_close`] exactly once.
SragStatus srag_index_open(const char *path, struct SragIndex **out);

// Number of entries in an opened index.
//
// # Safety
// `index` must be a live handle from [`srag_index_open`].
SragStatus srag_index_len(const struct SragIndex *index, size_t *out);

// Embedding dimension of an opened index.
//
// # Safety
// `index` must be a live handle from [`srag_index_open`].
SragStatus srag_index_dim(const struct SragIndex *index, size_t *out);

// Search an opened index with a raw query vector. The result is a JSON
// array (free with [`srag_string_free`]) of hits ordered best-first:
// `[{"incident_id","seq","text","similarity","rank"}]`.
//
// # Safety
// `index` must be a live handle, `query` must point to `query_len`
// readable floats, and `out` must be a valid pointer.
SragStatus srag_index_search(const struct SragIndex *index,
                             const float *query,
                             size_t query_len,
                             size_t k,
                             char **out);

// Release an index handle. Null is accepted and ignored.
//
// # Safety
// `index` must be a handle from [`srag_index_open`] not yet closed.
void srag_index_close(struct SragIndex *index);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SERVICE_RAG_H */
