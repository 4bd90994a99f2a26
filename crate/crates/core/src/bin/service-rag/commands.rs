use std::path::{Path, PathBuf};

use serde::Deserialize;
use service_rag::config::AppConfig;
use service_rag::corpus::{load_corpus, split_into_chunks, Corpus, CorpusFormat};
use service_rag::eval::{
    eval_answers, eval_correction, eval_retrieval, eval_summary, inject_typos, AnswerRecord,
    CorrectionReport, EvalReport, RetrievalReport, SummaryReport, TypoInjectorConfig,
};
use service_rag::generation::{parse_paraphrases, render_paraphrase_prompt};
use service_rag::index::VectorIndex;
use service_rag::tasks::{answer_question, correct_text, summarize};
use service_rag::vectors::embed_with_parallelism;

use crate::args::FormatArg;
use crate::errors::{data_io, CliError};
use crate::providers::{make_chat, make_embedder};
use crate::reports::{atomic_write, write_report_files};

fn corpus_format(path: &Path, flag: Option<FormatArg>) -> CorpusFormat {
    match flag {
        Some(FormatArg::Jsonl) => CorpusFormat::Jsonl,
        Some(FormatArg::TextDir) => CorpusFormat::TextDir,
        None if path.is_dir() => CorpusFormat::TextDir,
        None => CorpusFormat::Jsonl,
    }
}

fn load(path: &Path, flag: Option<FormatArg>) -> Result<Corpus, CliError> {
    Ok(load_corpus(path, corpus_format(path, flag))?)
}

fn read_text(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| data_io("read", path, &e))
}

/// Primary text output goes to stdout, or to a file when requested.
fn deliver(output: Option<&Path>, text: &str) -> Result<(), CliError> {
    match output {
        Some(path) => {
            let mut body = text.to_string();
            if !body.ends_with('\n') {
                body.push('\n');
            }
            atomic_write(path, body.as_bytes())?;
            eprintln!("wrote {}", path.display());
        }
        None => println!("{text}"),
    }
    Ok(())
}

pub fn ingest(corpus_path: &Path, format: Option<FormatArg>) -> Result<(), CliError> {
    let corpus = load(corpus_path, format)?;
    let messages: usize = corpus.incidents.iter().map(|i| i.exchange.len()).sum();
    println!("loaded {} incidents from {}", corpus.incidents.len(), corpus_path.display());
    println!("total messages: {messages}");
    let ids: Vec<&str> = corpus.incidents.iter().map(|i| i.id.as_str()).collect();
    println!("ids: {}", ids.join(" "));
    Ok(())
}

pub fn build_index(
    cfg: &AppConfig,
    corpus_path: &Path,
    index_path: &Path,
    format: Option<FormatArg>,
) -> Result<(), CliError> {
    let corpus = load(corpus_path, format)?;
    let embedder = make_embedder(cfg)?;
    let mut all_chunks = Vec::new();
    for incident in &corpus.incidents {
        all_chunks.extend(split_into_chunks(&incident.id, &incident.document(), &cfg.chunker)?);
    }
    let texts: Vec<String> = all_chunks.iter().map(|c| c.text.clone()).collect();
    let embeddings = embed_with_parallelism(&embedder, &texts, cfg.parallelism)?;
    let dim = embeddings.first().map(|e| e.dim).unwrap_or(0);
    let mut index = VectorIndex::new(embedder.model_id(), dim);
    index.add(all_chunks, embeddings)?;
    index.save(index_path)?;
    println!(
        "indexed {} incidents into {} chunks (dim {}, model {})",
        corpus.incidents.len(),
        index.len(),
        dim,
        index.model_id()
    );
    println!("wrote {}", index_path.display());
    Ok(())
}

pub fn correct(cfg: &AppConfig, input: &Path, output: Option<&Path>) -> Result<(), CliError> {
    let text = read_text(input)?;
    let chat = make_chat(cfg)?;
    let result = correct_text(&text, &*chat, &cfg.chat.generation)?;
    deliver(output, &result.corrected_text)?;
    eprintln!("words: {} in, {} out", result.words_original, result.words_corrected);
    Ok(())
}

pub fn summarize_cmd(
    cfg: &AppConfig,
    input: &Path,
    words: usize,
    output: Option<&Path>,
) -> Result<(), CliError> {
    let text = read_text(input)?;
    let source_id = file_stem(input);
    let chat = make_chat(cfg)?;
    let result = summarize(&source_id, &text, words, &*chat, &cfg.chat.generation)?;
    deliver(output, &result.summary_text)?;
    eprintln!("summary words: {} (target {})", result.summary_words, result.target_words);
    Ok(())
}

pub fn ask(cfg: &AppConfig, question: &str, index_path: &Path, k: usize) -> Result<(), CliError> {
    let embedder = make_embedder(cfg)?;
    let index = VectorIndex::load_checked(index_path, embedder.model_id())?;
    let chat = make_chat(cfg)?;
    let result = answer_question(question, &index, k, &*embedder, &*chat, &cfg.chat.generation)?;
    println!("{}", result.answer_text);
    if !result.answered {
        eprintln!("answered: false");
    }
    Ok(())
}

pub fn eval_correction_cmd(
    cfg: &AppConfig,
    inputs: &[PathBuf],
    errors: Option<usize>,
    seed: Option<u64>,
) -> Result<(), CliError> {
    let chat = make_chat(cfg)?;
    let error_count = errors.unwrap_or(5);
    let base_seed = seed.unwrap_or(1);
    let mut rows = Vec::new();
    for (i, path) in inputs.iter().enumerate() {
        let reference = read_text(path)?;
        let injector = TypoInjectorConfig::new(base_seed + i as u64, error_count);
        let (corrupted, _) = inject_typos(&reference, &injector)?;
        let corrected = correct_text(&corrupted, &*chat, &cfg.chat.generation)?;
        rows.push(eval_correction(
            &file_stem(path),
            &reference,
            &corrupted,
            &corrected.corrected_text,
        ));
    }
    announce(write_report_files(
        &cfg.out_dir,
        "correction",
        &EvalReport::Correction(CorrectionReport { rows }),
    )?)
}

pub fn eval_summaries_cmd(
    cfg: &AppConfig,
    corpus_path: &Path,
    format: Option<FormatArg>,
    words: &[usize],
    reading_wpm: Option<f64>,
) -> Result<(), CliError> {
    let corpus = load(corpus_path, format)?;
    let chat = make_chat(cfg)?;
    let embedder = make_embedder(cfg)?;
    let targets: Vec<usize> = if words.is_empty() { vec![100] } else { words.to_vec() };
    let wpm = reading_wpm.unwrap_or(cfg.reading_wpm);
    let mut rows = Vec::new();
    for incident in &corpus.incidents {
        let doc = incident.document();
        for &target in &targets {
            let result = summarize(&incident.id, &doc, target, &*chat, &cfg.chat.generation)?;
            rows.push(eval_summary(&doc, &result, wpm, &*embedder)?);
        }
    }
    announce(write_report_files(
        &cfg.out_dir,
        "summaries",
        &EvalReport::Summaries(SummaryReport { rows }),
    )?)
}

#[derive(Debug, Deserialize)]
struct QueryRecord {
    query_id: String,
    text: String,
    truth_incident_id: String,
}

fn load_queries(path: &Path) -> Result<Vec<QueryRecord>, CliError> {
    let raw = read_text(path)?;
    let mut queries = Vec::new();
    for (lineno, line) in raw.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let q: QueryRecord = serde_json::from_str(line).map_err(|e| {
            CliError::Data(format!("{}:{}: {e}", path.display(), lineno + 1))
        })?;
        queries.push(q);
    }
    if queries.is_empty() {
        return Err(CliError::Data(format!("{}: no queries found", path.display())));
    }
    Ok(queries)
}

pub fn eval_retrieval_cmd(
    cfg: &AppConfig,
    index_path: &Path,
    queries_path: &Path,
    k_sweep: &[usize],
) -> Result<(), CliError> {
    let embedder = make_embedder(cfg)?;
    let index = VectorIndex::load_checked(index_path, embedder.model_id())?;
    let queries = load_queries(queries_path)?;
    let pairs: Vec<(String, String)> =
        queries.into_iter().map(|q| (q.text, q.truth_incident_id)).collect();
    let ks: Vec<usize> = if k_sweep.is_empty() { vec![cfg.k] } else { k_sweep.to_vec() };
    let mut rows = Vec::new();
    for k in ks {
        rows.push(eval_retrieval(&pairs, &index, k, &*embedder)?);
    }
    announce(write_report_files(
        &cfg.out_dir,
        "retrieval",
        &EvalReport::Retrieval(RetrievalReport { rows }),
    )?)
}

pub fn eval_answers_cmd(
    cfg: &AppConfig,
    index_path: &Path,
    queries_path: &Path,
    k: usize,
) -> Result<(), CliError> {
    let embedder = make_embedder(cfg)?;
    let index = VectorIndex::load_checked(index_path, embedder.model_id())?;
    let chat = make_chat(cfg)?;
    let queries = load_queries(queries_path)?;
    let mut answers = Vec::new();
    for q in &queries {
        let result = answer_question(&q.text, &index, k, &*embedder, &*chat, &cfg.chat.generation)?;
        answers.push(AnswerRecord {
            query_id: q.query_id.clone(),
            truth_incident_id: q.truth_incident_id.clone(),
            answer_text: result.answer_text,
        });
    }
    let matrix = eval_answers(&answers, &index, &*embedder)?;
    announce(write_report_files(
        &cfg.out_dir,
        "answers_matrix",
        &EvalReport::Answers(matrix),
    )?)
}

pub fn paraphrase(
    cfg: &AppConfig,
    incident_id: &str,
    corpus_path: &Path,
    format: Option<FormatArg>,
    n: usize,
    output: Option<PathBuf>,
) -> Result<(), CliError> {
    if n == 0 {
        return Err(CliError::Usage("--n must be at least 1".to_string()));
    }
    let corpus = load(corpus_path, format)?;
    let incident = corpus.get(incident_id).ok_or_else(|| {
        CliError::Data(format!(
            "incident \"{incident_id}\" not found in {}",
            corpus_path.display()
        ))
    })?;
    let chat = make_chat(cfg)?;
    let bundle = render_paraphrase_prompt(&incident.request_text, n);
    let reply = chat.complete(&bundle.messages, &cfg.chat.generation)?;
    let variants = parse_paraphrases(&reply);
    if variants.is_empty() {
        return Err(CliError::Provider(
            "provider returned no parseable reformulations".to_string(),
        ));
    }
    if variants.len() != n {
        eprintln!("note: requested {n} reformulations, parsed {}", variants.len());
    }
    let path = match output {
        Some(path) => path,
        None => {
            std::fs::create_dir_all(&cfg.out_dir)
                .map_err(|e| data_io("create", &cfg.out_dir, &e))?;
            cfg.out_dir.join(format!("queries_{}.jsonl", sanitize(incident_id)))
        }
    };
    let mut body = String::new();
    for (i, text) in variants.iter().enumerate() {
        let record = serde_json::json!({
            "query_id": format!("{}-p{}", incident.id, i + 1),
            "text": text,
            "truth_incident_id": incident.id,
        });
        body.push_str(&record.to_string());
        body.push('\n');
    }
    atomic_write(&path, body.as_bytes())?;
    println!("wrote {} with {} queries", path.display(), variants.len());
    Ok(())
}

fn file_stem(path: &Path) -> String {
    path.file_stem().and_then(|s| s.to_str()).unwrap_or("input").to_string()
}

fn sanitize(raw: &str) -> String {
    let cleaned: String = raw
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || matches!(c, '-' | '_' | '.') { c } else { '_' })
        .collect();
    if cleaned.is_empty() {
        "_".to_string()
    } else {
        cleaned
    }
}

fn announce(paths: Vec<PathBuf>) -> Result<(), CliError> {
    for path in paths {
        println!("wrote {}", path.display());
    }
    Ok(())
}
