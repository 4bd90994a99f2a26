//! The three end-to-end pipelines: correct a text, summarize to a target
//! word count, and answer a question by retrieve-then-generate.

use thiserror::Error;

use crate::corpus::word_count;
use crate::generation::{
    render_correction_prompt, render_rag_prompt, render_summary_prompt, ChatProvider,
    GenerationConfig, GenerationError,
};
use crate::index::{IndexError, RetrievalHit, VectorIndex};
use crate::vectors::{Embedder, VectorError};

/// Default number of neighbors retrieved for question answering.
pub const DEFAULT_K: usize = 2;

#[derive(Debug, Error)]
pub enum TaskError {
    #[error("{what} must not be empty")]
    EmptyInput { what: &'static str },
    #[error("target word count must be at least 1")]
    InvalidTarget,
    #[error(transparent)]
    Generation(#[from] GenerationError),
    #[error(transparent)]
    Vector(#[from] VectorError),
    #[error(transparent)]
    Index(#[from] IndexError),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CorrectionResult {
    pub original_text: String,
    pub corrected_text: String,
    pub words_original: usize,
    pub words_corrected: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SummaryResult {
    pub source_id: String,
    pub target_words: usize,
    pub summary_text: String,
    pub summary_words: usize,
}

#[derive(Debug, Clone)]
pub struct AnswerResult {
    pub question: String,
    pub hits: Vec<RetrievalHit>,
    pub answer_text: String,
    /// False iff the model answered exactly "I don't know".
    pub answered: bool,
}

/// The declined-to-answer detector: an exact trimmed, case-insensitive
/// match of the template's fallback phrase. Anything else counts as an
/// answer.
pub fn is_i_dont_know(answer: &str) -> bool {
    answer.trim().eq_ignore_ascii_case("i don't know")
}

/// Ask the provider to fix spelling and grammar while preserving wording.
pub fn correct_text(
    text: &str,
    chat: &dyn ChatProvider,
    cfg: &GenerationConfig,
) -> Result<CorrectionResult, TaskError> {
    if text.trim().is_empty() {
        return Err(TaskError::EmptyInput { what: "text" });
    }
    let bundle = render_correction_prompt(text);
    let corrected_text = chat.complete(&bundle.messages, cfg)?;
    Ok(CorrectionResult {
        words_original: word_count(text),
        words_corrected: word_count(&corrected_text),
        original_text: text.to_string(),
        corrected_text,
    })
}

/// Summarize to a target word count. The length is measured, not
/// enforced: deviations are part of what the evaluation reports.
pub fn summarize(
    source_id: &str,
    source_text: &str,
    target_words: usize,
    chat: &dyn ChatProvider,
    cfg: &GenerationConfig,
) -> Result<SummaryResult, TaskError> {
    if source_text.trim().is_empty() {
        return Err(TaskError::EmptyInput { what: "source text" });
    }
    if target_words == 0 {
        return Err(TaskError::InvalidTarget);
    }
    let bundle = render_summary_prompt(source_text, target_words);
    let summary_text = chat.complete(&bundle.messages, cfg)?;
    Ok(SummaryResult {
        source_id: source_id.to_string(),
        target_words,
        summary_words: word_count(&summary_text),
        summary_text,
    })
}

/// Retrieve the top-k chunks for the question, assemble the RAG prompt,
/// and ask the chat provider. Exactly one retrieval and one completion
/// per call; an empty index proceeds with an empty context.
pub fn answer_question(
    question: &str,
    index: &VectorIndex,
    k: usize,
    embedder: &dyn Embedder,
    chat: &dyn ChatProvider,
    cfg: &GenerationConfig,
) -> Result<AnswerResult, TaskError> {
    if question.trim().is_empty() {
        return Err(TaskError::EmptyInput { what: "question" });
    }
    if k == 0 {
        return Err(TaskError::Index(IndexError::InvalidK));
    }
    let query = embedder
        .embed(std::slice::from_ref(&question.to_string()))?
        .pop()
        .expect("one embedding per text");
    let hits = index.search(&query, k)?;
    let chunks: Vec<_> = hits.iter().map(|h| h.chunk.clone()).collect();
    let bundle = render_rag_prompt(&chunks, question);
    let answer_text = chat.complete(&bundle.messages, cfg)?;
    let answered = !is_i_dont_know(&answer_text);
    Ok(AnswerResult { question: question.to_string(), hits, answer_text, answered })
}
