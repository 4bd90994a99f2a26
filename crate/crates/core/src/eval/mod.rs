//! The offline evaluation harness: typo-injection correction scoring,
//! summary similarity/length metrics, retrieval relevance proportions,
//! and the answer distance matrix.

mod report;

pub use report::{render_report, EvalReport, ReportFormat, RetrievalReport};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::corpus::word_count;
use crate::index::{IndexError, VectorIndex};
use crate::tasks::SummaryResult;
use crate::vectors::{cosine_similarity, Embedder, VectorError};

/// Default reading speed for the time-saved estimate, words per minute.
pub const DEFAULT_READING_WPM: f64 = 200.0;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("typo injector config invalid: {message}")]
    InvalidConfig { message: String },
    #[error("need {needed} eligible words (>=3 chars, all alphabetic), found {found}")]
    InsufficientEligibleWords { needed: usize, found: usize },
    #[error("index is empty")]
    EmptyIndex,
    #[error("k must be at least 1")]
    InvalidK,
    #[error("reading speed must be positive, got {got}")]
    InvalidReadingSpeed { got: f64 },
    #[error("truth incident \"{id}\" is not in the index")]
    UnknownIncident { id: String },
    #[error(transparent)]
    Vector(#[from] VectorError),
    #[error(transparent)]
    Index(#[from] IndexError),
}

/// Deterministic typo injection settings. The same seed always produces
/// the same corrupted text.
#[derive(Debug, Clone, Copy)]
pub struct TypoInjectorConfig {
    pub seed: u64,
    pub error_count: usize,
    /// Probability of an adjacent transposition per edit; the rest are
    /// single-character deletions.
    pub transpose_prob: f64,
}

impl TypoInjectorConfig {
    pub fn new(seed: u64, error_count: usize) -> Self {
        TypoInjectorConfig { seed, error_count, transpose_prob: 0.5 }
    }

    fn validate(&self) -> Result<(), EvalError> {
        if self.error_count == 0 {
            return Err(EvalError::InvalidConfig {
                message: "error_count must be at least 1".to_string(),
            });
        }
        if !(0.0..=1.0).contains(&self.transpose_prob) {
            return Err(EvalError::InvalidConfig {
                message: format!("transpose_prob {} outside [0, 1]", self.transpose_prob),
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum EditKind {
    TransposeAdjacent,
    DeleteChar,
}

/// One injected typo: which whitespace-delimited word was edited and how.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct EditRecord {
    pub word_index: usize,
    pub kind: EditKind,
}

fn word_spans(text: &str) -> Vec<(usize, usize)> {
    let mut spans = Vec::new();
    let mut start: Option<usize> = None;
    for (pos, ch) in text.char_indices() {
        if ch.is_whitespace() {
            if let Some(s) = start.take() {
                spans.push((s, pos));
            }
        } else if start.is_none() {
            start = Some(pos);
        }
    }
    if let Some(s) = start {
        spans.push((s, text.len()));
    }
    spans
}

/// Corrupt a text with exactly `error_count` classic typos (adjacent
/// letter twisters and missing letters), each on a distinct word of at
/// least three alphabetic characters. Whitespace is preserved exactly, so
/// every edit changes one word without merging or splitting any.
pub fn inject_typos(
    text: &str,
    cfg: &TypoInjectorConfig,
) -> Result<(String, Vec<EditRecord>), EvalError> {
    cfg.validate()?;
    let spans = word_spans(text);
    let eligible: Vec<usize> = spans
        .iter()
        .enumerate()
        .filter(|(_, &(s, e))| {
            let w = &text[s..e];
            w.chars().count() >= 3 && w.chars().all(|c| c.is_alphabetic())
        })
        .map(|(i, _)| i)
        .collect();
    if eligible.len() < cfg.error_count {
        return Err(EvalError::InsufficientEligibleWords {
            needed: cfg.error_count,
            found: eligible.len(),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut chosen: Vec<usize> = rand::seq::index::sample(&mut rng, eligible.len(), cfg.error_count)
        .into_iter()
        .map(|i| eligible[i])
        .collect();
    chosen.sort_unstable();
    let mut records = Vec::with_capacity(chosen.len());
    let mut replacements = Vec::with_capacity(chosen.len());
    for &word_index in &chosen {
        let (s, e) = spans[word_index];
        let mut chars: Vec<char> = text[s..e].chars().collect();
        let kind = if rng.random_bool(cfg.transpose_prob) {
            // Transpose only where adjacent characters differ, so the edit
            // is guaranteed to change the word; otherwise fall back to a
            // deletion (which always changes it).
            let positions: Vec<usize> =
                (0..chars.len() - 1).filter(|&p| chars[p] != chars[p + 1]).collect();
            if positions.is_empty() {
                delete_random_char(&mut chars, &mut rng);
                EditKind::DeleteChar
            } else {
                let p = positions[rng.random_range(0..positions.len())];
                chars.swap(p, p + 1);
                EditKind::TransposeAdjacent
            }
        } else {
            delete_random_char(&mut chars, &mut rng);
            EditKind::DeleteChar
        };
        records.push(EditRecord { word_index, kind });
        replacements.push((s, e, chars.into_iter().collect::<String>()));
    }
    let mut corrupted = text.to_string();
    for (s, e, word) in replacements.into_iter().rev() {
        corrupted.replace_range(s..e, &word);
    }
    Ok((corrupted, records))
}

fn delete_random_char(chars: &mut Vec<char>, rng: &mut ChaCha8Rng) {
    let p = rng.random_range(0..chars.len());
    chars.remove(p);
}

/// Word-level error count: the minimum number of substitutions,
/// insertions, and deletions aligning the whitespace token sequences.
pub fn count_errors(reference: &str, candidate: &str) -> usize {
    let a: Vec<&str> = reference.split_whitespace().collect();
    let b: Vec<&str> = candidate.split_whitespace().collect();
    if a.is_empty() {
        return b.len();
    }
    if b.is_empty() {
        return a.len();
    }
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    let mut curr = vec![0usize; b.len() + 1];
    for i in 1..=a.len() {
        curr[0] = i;
        for j in 1..=b.len() {
            let sub = prev[j - 1] + usize::from(a[i - 1] != b[j - 1]);
            curr[j] = sub.min(prev[j] + 1).min(curr[j - 1] + 1);
        }
        std::mem::swap(&mut prev, &mut curr);
    }
    prev[b.len()]
}

/// One evaluated correction run.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CorrectionRow {
    pub incident_id: String,
    pub words_original: usize,
    pub errors_injected: usize,
    pub words_final: usize,
    pub errors_removed: usize,
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct CorrectionReport {
    pub rows: Vec<CorrectionRow>,
}

/// Score one correction: injected errors are counted against the clean
/// reference, and removed = injected - remaining, floored at zero (a
/// model can introduce new deviations of its own).
pub fn eval_correction(
    incident_id: &str,
    reference: &str,
    corrupted: &str,
    corrected: &str,
) -> CorrectionRow {
    let errors_injected = count_errors(reference, corrupted);
    let remaining = count_errors(reference, corrected);
    CorrectionRow {
        incident_id: incident_id.to_string(),
        words_original: word_count(corrupted),
        errors_injected,
        words_final: word_count(corrected),
        errors_removed: errors_injected.saturating_sub(remaining),
    }
}

/// One evaluated summary.
#[derive(Debug, Clone, Serialize)]
pub struct SummaryEvalRow {
    pub incident_id: String,
    pub target_words: usize,
    pub summary_words: usize,
    /// Cosine similarity of source and summary embeddings, in [-1, 1].
    pub cs: f64,
    pub time_saved_min: f64,
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct SummaryReport {
    pub rows: Vec<SummaryEvalRow>,
}

/// Embed source and summary and report their cosine similarity plus the
/// reading-time saved estimate: (source words - summary words) / wpm,
/// floored at zero.
pub fn eval_summary(
    source_text: &str,
    result: &SummaryResult,
    reading_wpm: f64,
    embedder: &dyn Embedder,
) -> Result<SummaryEvalRow, EvalError> {
    if !(reading_wpm > 0.0) || !reading_wpm.is_finite() {
        return Err(EvalError::InvalidReadingSpeed { got: reading_wpm });
    }
    let embeddings =
        embedder.embed(&[source_text.to_string(), result.summary_text.clone()])?;
    let cs = cosine_similarity(&embeddings[0], &embeddings[1])?;
    let saved_words = word_count(source_text) as f64 - result.summary_words as f64;
    Ok(SummaryEvalRow {
        incident_id: result.source_id.clone(),
        target_words: result.target_words,
        summary_words: result.summary_words,
        cs,
        time_saved_min: (saved_words / reading_wpm).max(0.0),
    })
}

/// Relevance of one k value across a query set.
#[derive(Debug, Clone, Serialize)]
pub struct RetrievalEvalReport {
    pub k: usize,
    pub per_query_relevant_fraction: Vec<f64>,
    pub average_proportion: f64,
}

/// For each (query_text, truth_incident_id) pair, the fraction of the
/// top-k chunks that come from the truth incident, averaged over queries.
pub fn eval_retrieval(
    queries: &[(String, String)],
    index: &VectorIndex,
    k: usize,
    embedder: &dyn Embedder,
) -> Result<RetrievalEvalReport, EvalError> {
    if index.is_empty() {
        return Err(EvalError::EmptyIndex);
    }
    if k == 0 {
        return Err(EvalError::InvalidK);
    }
    let mut fractions = Vec::with_capacity(queries.len());
    for (query_text, truth) in queries {
        let query = embedder
            .embed(std::slice::from_ref(query_text))?
            .pop()
            .expect("one embedding per text");
        let hits = index.search(&query, k)?;
        let relevant = hits.iter().filter(|h| &h.chunk.incident_id == truth).count();
        fractions.push(relevant as f64 / k as f64);
    }
    let average_proportion = mean(&fractions);
    Ok(RetrievalEvalReport { k, per_query_relevant_fraction: fractions, average_proportion })
}

/// One answered query headed into the distance matrix.
#[derive(Debug, Clone)]
pub struct AnswerRecord {
    pub query_id: String,
    pub truth_incident_id: String,
    pub answer_text: String,
}

/// Distance matrix of answers (columns) against incidents (rows):
/// each cell is the cosine distance from the answer's embedding to the
/// nearest chunk of that incident.
#[derive(Debug, Clone, Serialize)]
pub struct AnswerDistanceMatrix {
    pub rows: Vec<String>,
    pub cols: Vec<String>,
    /// cells[row][col], in [0, 2].
    pub cells: Vec<Vec<f64>>,
    pub truth_by_query: Vec<String>,
    pub diagonal_mean: f64,
    pub nearest_offdiagonal_mean: f64,
}

/// Embed every answer, collect per-incident nearest distances, and report
/// the matrix plus its truth-diagonal and nearest-irrelevant means.
pub fn eval_answers(
    answers: &[AnswerRecord],
    index: &VectorIndex,
    embedder: &dyn Embedder,
) -> Result<AnswerDistanceMatrix, EvalError> {
    if index.is_empty() {
        return Err(EvalError::EmptyIndex);
    }
    let rows = index.incident_ids();
    let row_of = |id: &str| rows.iter().position(|r| r == id);
    let mut cells = vec![Vec::with_capacity(answers.len()); rows.len()];
    let mut diagonal = Vec::with_capacity(answers.len());
    let mut nearest_off = Vec::with_capacity(answers.len());
    for answer in answers {
        let truth_row = row_of(&answer.truth_incident_id).ok_or_else(|| {
            EvalError::UnknownIncident { id: answer.truth_incident_id.clone() }
        })?;
        let query = embedder
            .embed(std::slice::from_ref(&answer.answer_text))?
            .pop()
            .expect("one embedding per text");
        let distances = index.nearest_distance_per_incident(&query)?;
        for (r, incident) in rows.iter().enumerate() {
            cells[r].push(distances[incident]);
        }
        diagonal.push(distances[&rows[truth_row]]);
        let off = rows
            .iter()
            .enumerate()
            .filter(|(r, _)| *r != truth_row)
            .map(|(_, id)| distances[id])
            .fold(f64::INFINITY, f64::min);
        if off.is_finite() {
            nearest_off.push(off);
        }
    }
    Ok(AnswerDistanceMatrix {
        cols: answers.iter().map(|a| a.query_id.clone()).collect(),
        truth_by_query: answers.iter().map(|a| a.truth_incident_id.clone()).collect(),
        diagonal_mean: mean(&diagonal),
        nearest_offdiagonal_mean: mean(&nearest_off),
        rows,
        cells,
    })
}

fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        0.0
    } else {
        xs.iter().sum::<f64>() / xs.len() as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{split_into_chunks, ChunkerConfig};
    use crate::vectors::{Embedder, MockEmbedder, MOCK_DIM};

    #[test]
    fn injector_is_deterministic() {
        let text = "the conveyor belt stops whenever the motor overheats badly";
        let cfg = TypoInjectorConfig::new(42, 3);
        let (a, ra) = inject_typos(text, &cfg).unwrap();
        let (b, rb) = inject_typos(text, &cfg).unwrap();
        assert_eq!(a, b);
        assert_eq!(ra, rb);
        assert_ne!(a, text);
    }

    #[test]
    fn injector_rejects_zero_errors() {
        let cfg = TypoInjectorConfig::new(1, 0);
        assert!(matches!(
            inject_typos("some lengthy words here", &cfg),
            Err(EvalError::InvalidConfig { .. })
        ));
    }

    #[test]
    fn injector_needs_enough_eligible_words() {
        // Only "ccc" qualifies: "a" and "bb" are short, "dd-d" is not alphabetic.
        let err = inject_typos("a bb ccc dd-d", &TypoInjectorConfig::new(5, 2)).unwrap_err();
        match err {
            EvalError::InsufficientEligibleWords { needed, found } => {
                assert_eq!((needed, found), (2, 1));
            }
            other => panic!("unexpected: {other}"),
        }
    }

    #[test]
    fn injector_edits_distinct_words_and_preserves_whitespace() {
        let text = "alpha  beta\tgamma\ndelta epsilon zeta eta theta";
        for seed in 1..=100u64 {
            let cfg = TypoInjectorConfig::new(seed, 4);
            let (corrupted, records) = inject_typos(text, &cfg).unwrap();
            assert_eq!(records.len(), 4);
            let mut indices: Vec<usize> = records.iter().map(|r| r.word_index).collect();
            indices.dedup();
            assert_eq!(indices.len(), 4, "edits must hit distinct words");
            let orig_words: Vec<&str> = text.split_whitespace().collect();
            let new_words: Vec<&str> = corrupted.split_whitespace().collect();
            assert_eq!(orig_words.len(), new_words.len());
            for r in &records {
                assert_ne!(orig_words[r.word_index], new_words[r.word_index]);
            }
            let orig_gaps: Vec<&str> = text.split(|c: char| !c.is_whitespace()).filter(|s| !s.is_empty()).collect();
            let new_gaps: Vec<&str> = corrupted.split(|c: char| !c.is_whitespace()).filter(|s| !s.is_empty()).collect();
            assert_eq!(orig_gaps, new_gaps);
        }
    }

    #[test]
    fn injected_count_matches_count_errors_across_seeds() {
        let texts = [
            "the spindle drive reports a position lag fault after the tool change cycle completes",
            "our packaging line stops though the safety doors are closed and the light curtain shows green",
            "after the firmware update the touch panel freezes on the boot screen every second start",
        ];
        for text in texts {
            for seed in 1..=100u64 {
                let cfg = TypoInjectorConfig::new(seed, 5);
                let (corrupted, records) = inject_typos(text, &cfg).unwrap();
                assert_eq!(count_errors(text, &corrupted), 5, "seed {seed}");
                assert_eq!(records.len(), 5);
            }
        }
    }

    #[test]
    fn transpose_only_config_produces_transpositions() {
        let text = "conveyor motor bearing failure analysis";
        let cfg = TypoInjectorConfig { seed: 9, error_count: 3, transpose_prob: 1.0 };
        let (_, records) = inject_typos(text, &cfg).unwrap();
        assert!(records.iter().all(|r| r.kind == EditKind::TransposeAdjacent));
    }

    #[test]
    fn delete_only_config_produces_deletions() {
        let text = "conveyor motor bearing failure analysis";
        let cfg = TypoInjectorConfig { seed: 9, error_count: 3, transpose_prob: 0.0 };
        let (corrupted, records) = inject_typos(text, &cfg).unwrap();
        assert!(records.iter().all(|r| r.kind == EditKind::DeleteChar));
        assert_eq!(corrupted.len(), text.len() - 3);
    }

    #[test]
    fn count_errors_cases() {
        assert_eq!(count_errors("same text here", "same text here"), 0);
        assert_eq!(count_errors("a b c", "a c"), 1);
        assert_eq!(count_errors("a b c", "a x c"), 1);
        assert_eq!(count_errors("a b c", "a b c d"), 1);
        assert_eq!(count_errors("", ""), 0);
        assert_eq!(count_errors("", "x y"), 2);
        assert_eq!(count_errors("x y", ""), 2);
        assert_eq!(count_errors("one two three four", "won too three for"), 3);
    }

    #[test]
    fn eval_correction_perfect_and_unchanged() {
        let reference = "the pump fails when the filter clogs completely";
        let cfg = TypoInjectorConfig::new(7, 3);
        let (corrupted, _) = inject_typos(reference, &cfg).unwrap();
        let perfect = eval_correction("Inc1", reference, &corrupted, reference);
        assert_eq!(perfect.errors_injected, 3);
        assert_eq!(perfect.errors_removed, 3);
        assert_eq!(perfect.words_original, word_count(reference));
        let lazy = eval_correction("Inc1", reference, &corrupted, &corrupted);
        assert_eq!(lazy.errors_removed, 0);
    }

    #[test]
    fn eval_correction_floors_at_zero() {
        let row = eval_correction("Inc1", "a b c", "a x c", "totally different words entirely");
        assert_eq!(row.errors_injected, 1);
        assert_eq!(row.errors_removed, 0);
    }

    fn summary_result(id: &str, target: usize, text: &str) -> SummaryResult {
        SummaryResult {
            source_id: id.to_string(),
            target_words: target,
            summary_words: word_count(text),
            summary_text: text.to_string(),
        }
    }

    #[test]
    fn eval_summary_identity_is_exact() {
        let embedder = MockEmbedder::default();
        let source = "the heat exchanger leaks at the gasket";
        let result = summary_result("Inc1", 100, source);
        let row = eval_summary(source, &result, 200.0, &embedder).unwrap();
        assert_eq!(row.cs, 1.0);
        assert_eq!(row.time_saved_min, 0.0);
    }

    #[test]
    fn eval_summary_time_formula() {
        let embedder = MockEmbedder::default();
        let source_words: Vec<String> = (0..300).map(|i| format!("w{i}")).collect();
        let source = source_words.join(" ");
        let result = summary_result("Inc1", 100, "w0 w1 w2 w3");
        let row = eval_summary(&source, &result, 200.0, &embedder).unwrap();
        assert_eq!(row.time_saved_min, (300.0 - 4.0) / 200.0);
        assert!(matches!(
            eval_summary(&source, &result, 0.0, &embedder),
            Err(EvalError::InvalidReadingSpeed { .. })
        ));
    }

    fn vocab_index(incidents: usize, chunks_each: usize) -> (VectorIndex, Vec<(String, String)>) {
        let embedder = MockEmbedder::default();
        let mut index = VectorIndex::new(embedder.model_id(), MOCK_DIM);
        let mut queries = Vec::new();
        for i in 0..incidents {
            let words: Vec<String> =
                (0..chunks_each * 8).map(|j| format!("inc{i}word{j}")).collect();
            let text = words.join(" ");
            let cfg = ChunkerConfig { chunk_size_tokens: 8, overlap_tokens: 0 };
            let chunks = split_into_chunks(&format!("Inc{i}"), &text, &cfg).unwrap();
            let texts: Vec<String> = chunks.iter().map(|c| c.text.clone()).collect();
            let embeddings = embedder.embed(&texts).unwrap();
            index.add(chunks, embeddings).unwrap();
            queries.push((words[..6].join(" "), format!("Inc{i}")));
        }
        (index, queries)
    }

    #[test]
    fn eval_retrieval_unique_vocabulary_hits_own_incident() {
        let (index, queries) = vocab_index(6, 2);
        let embedder = MockEmbedder::default();
        let report = eval_retrieval(&queries, &index, 1, &embedder).unwrap();
        assert_eq!(report.average_proportion, 1.0);
        assert!(report.per_query_relevant_fraction.iter().all(|&f| f == 1.0));
        assert_eq!(report.k, 1);
    }

    #[test]
    fn eval_retrieval_validates_inputs() {
        let (index, queries) = vocab_index(2, 1);
        let embedder = MockEmbedder::default();
        assert!(matches!(
            eval_retrieval(&queries, &index, 0, &embedder),
            Err(EvalError::InvalidK)
        ));
        let empty = VectorIndex::new(embedder.model_id(), MOCK_DIM);
        assert!(matches!(
            eval_retrieval(&queries, &empty, 1, &embedder),
            Err(EvalError::EmptyIndex)
        ));
    }

    #[test]
    fn eval_answers_verbatim_chunk_is_column_minimum() {
        let (index, _) = vocab_index(5, 2);
        let embedder = MockEmbedder::default();
        let answers: Vec<AnswerRecord> = index
            .entries()
            .filter(|e| e.chunk.seq == 0)
            .map(|e| AnswerRecord {
                query_id: format!("q-{}", e.chunk.incident_id),
                truth_incident_id: e.chunk.incident_id.clone(),
                answer_text: e.chunk.text.clone(),
            })
            .collect();
        assert_eq!(answers.len(), 5);
        let matrix = eval_answers(&answers, &index, &embedder).unwrap();
        assert_eq!(matrix.rows.len(), 5);
        assert_eq!(matrix.cols.len(), 5);
        for (q, truth) in matrix.truth_by_query.iter().enumerate() {
            let truth_row = matrix.rows.iter().position(|r| r == truth).unwrap();
            assert_eq!(matrix.cells[truth_row][q], 0.0);
            for (r, row_cells) in matrix.cells.iter().enumerate() {
                if r != truth_row {
                    assert!(row_cells[q] > 0.0, "row {r} col {q} must be above the diagonal");
                }
                assert!((0.0..=2.0).contains(&row_cells[q]));
            }
        }
        assert_eq!(matrix.diagonal_mean, 0.0);
        assert!(matrix.nearest_offdiagonal_mean > 0.0);
    }

    #[test]
    fn eval_answers_rejects_unknown_truth() {
        let (index, _) = vocab_index(2, 1);
        let embedder = MockEmbedder::default();
        let answers = vec![AnswerRecord {
            query_id: "q1".to_string(),
            truth_incident_id: "nonexistent".to_string(),
            answer_text: "whatever".to_string(),
        }];
        assert!(matches!(
            eval_answers(&answers, &index, &embedder),
            Err(EvalError::UnknownIncident { .. })
        ));
    }
}
