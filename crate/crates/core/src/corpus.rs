//! Incident ingestion, deterministic tokenization, and overlapping token chunking.

use std::collections::HashSet;
use std::fmt;
use std::fs;
use std::path::Path;
use std::time::SystemTime;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{file}:{line}: malformed record: {message}")]
    MalformedRecord {
        file: String,
        line: usize,
        message: String,
    },
    #[error("duplicate incident id \"{id}\"")]
    DuplicateId { id: String },
    #[error("incident \"{id}\": {message}")]
    InvalidIncident { id: String, message: String },
    #[error("invalid chunker config: overlap_tokens ({overlap}) must be smaller than chunk_size_tokens ({size})")]
    InvalidChunker { size: usize, overlap: usize },
}

/// Who wrote a message in the incident exchange.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AuthorRole {
    Customer,
    Agent,
}

impl fmt::Display for AuthorRole {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AuthorRole::Customer => write!(f, "customer"),
            AuthorRole::Agent => write!(f, "agent"),
        }
    }
}

/// One message of the expert exchange attached to an incident.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Message {
    pub author_role: AuthorRole,
    pub text: String,
    /// 0-based position within the exchange, contiguous.
    pub position: usize,
}

/// A historical customer request plus the message exchange that resolved it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Incident {
    pub id: String,
    pub request_text: String,
    pub exchange: Vec<Message>,
    pub tags: Vec<String>,
}

impl Incident {
    /// The retrievable text of an incident: request plus all messages,
    /// joined by blank lines, in exchange order.
    pub fn document(&self) -> String {
        let mut parts = Vec::with_capacity(1 + self.exchange.len());
        parts.push(self.request_text.as_str());
        for m in &self.exchange {
            parts.push(m.text.as_str());
        }
        parts.join("\n\n")
    }
}

/// An ordered set of incidents loaded from disk.
#[derive(Debug, Clone)]
pub struct Corpus {
    pub incidents: Vec<Incident>,
    pub source_path: String,
    pub loaded_at: SystemTime,
}

impl Corpus {
    pub fn get(&self, id: &str) -> Option<&Incident> {
        self.incidents.iter().find(|i| i.id == id)
    }
}

/// On-disk corpus layout.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CorpusFormat {
    /// One JSON object per line: `{"id", "request_text", "exchange": [{"author_role", "text"}], "tags"?}`.
    Jsonl,
    /// One `<id>.txt` per incident; sections split by `---` lines, each
    /// message section opens with a `customer:` or `agent:` header line.
    TextDir,
}

/// Chunking parameters. Defaults follow the retrieval pipeline this
/// library reproduces: 1000-token chunks with a 20-token overlap.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ChunkerConfig {
    pub chunk_size_tokens: usize,
    pub overlap_tokens: usize,
}

impl Default for ChunkerConfig {
    fn default() -> Self {
        Self {
            chunk_size_tokens: 1000,
            overlap_tokens: 20,
        }
    }
}

impl ChunkerConfig {
    pub fn validate(&self) -> Result<(), CorpusError> {
        if self.chunk_size_tokens == 0 || self.overlap_tokens >= self.chunk_size_tokens {
            return Err(CorpusError::InvalidChunker {
                size: self.chunk_size_tokens,
                overlap: self.overlap_tokens,
            });
        }
        Ok(())
    }
}

/// A contiguous token window of one incident's document.
#[derive(Debug, Clone, PartialEq)]
pub struct Chunk {
    pub incident_id: String,
    /// 0-based chunk sequence number within the document.
    pub seq: usize,
    pub text: String,
    /// Token index of the first token in this chunk.
    pub token_start: usize,
    /// Exclusive token index one past the last token.
    pub token_end: usize,
}

/// A token with its byte span in the source text.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub text: String,
    /// Byte offset of the first byte of the token.
    pub start: usize,
    /// Exclusive byte offset.
    pub end: usize,
}

/// Split text into tokens: maximal alphanumeric runs are one token each,
/// every other non-whitespace character is its own single-character token.
/// Whitespace only separates. Deterministic and offline; byte spans allow
/// exact reconstruction of the input.
pub fn tokenize(text: &str) -> Vec<Token> {
    let mut tokens = Vec::new();
    let mut run_start: Option<usize> = None;
    for (pos, ch) in text.char_indices() {
        if ch.is_alphanumeric() {
            if run_start.is_none() {
                run_start = Some(pos);
            }
            continue;
        }
        if let Some(start) = run_start.take() {
            tokens.push(Token {
                text: text[start..pos].to_string(),
                start,
                end: pos,
            });
        }
        if !ch.is_whitespace() {
            let end = pos + ch.len_utf8();
            tokens.push(Token {
                text: text[pos..end].to_string(),
                start: pos,
                end,
            });
        }
    }
    if let Some(start) = run_start {
        tokens.push(Token {
            text: text[start..].to_string(),
            start,
            end: text.len(),
        });
    }
    tokens
}

/// Number of maximal whitespace-delimited substrings.
pub fn word_count(text: &str) -> usize {
    text.split_whitespace().count()
}

/// Split a document into overlapping token chunks. Consecutive chunk starts
/// advance by `chunk_size_tokens - overlap_tokens`; the last chunk may be
/// shorter; no chunk is emitted past the end of the text.
pub fn split_into_chunks(
    doc_id: &str,
    text: &str,
    cfg: &ChunkerConfig,
) -> Result<Vec<Chunk>, CorpusError> {
    cfg.validate()?;
    let tokens = tokenize(text);
    let total = tokens.len();
    let mut chunks = Vec::new();
    if total == 0 {
        return Ok(chunks);
    }
    let step = cfg.chunk_size_tokens - cfg.overlap_tokens;
    let mut start = 0usize;
    loop {
        let end = (start + cfg.chunk_size_tokens).min(total);
        let byte_start = tokens[start].start;
        let byte_end = tokens[end - 1].end;
        chunks.push(Chunk {
            incident_id: doc_id.to_string(),
            seq: chunks.len(),
            text: text[byte_start..byte_end].to_string(),
            token_start: start,
            token_end: end,
        });
        if end == total {
            break;
        }
        start += step;
    }
    Ok(chunks)
}

/// Load a corpus from disk in the given format. Incident order follows
/// file order (JSONL) or sorted filename order (text dir).
pub fn load_corpus(path: &Path, format: CorpusFormat) -> Result<Corpus, CorpusError> {
    let incidents = match format {
        CorpusFormat::Jsonl => load_jsonl(path)?,
        CorpusFormat::TextDir => load_text_dir(path)?,
    };
    let mut seen = HashSet::new();
    for inc in &incidents {
        if !seen.insert(inc.id.clone()) {
            return Err(CorpusError::DuplicateId { id: inc.id.clone() });
        }
        validate_incident(inc)?;
    }
    Ok(Corpus {
        incidents,
        source_path: path.display().to_string(),
        loaded_at: SystemTime::now(),
    })
}

fn validate_incident(inc: &Incident) -> Result<(), CorpusError> {
    let invalid = |message: &str| CorpusError::InvalidIncident {
        id: inc.id.clone(),
        message: message.to_string(),
    };
    if inc.id.trim().is_empty() {
        return Err(invalid("empty id"));
    }
    if inc.request_text.trim().is_empty() {
        return Err(invalid("empty request_text"));
    }
    for (i, m) in inc.exchange.iter().enumerate() {
        if m.text.trim().is_empty() {
            return Err(invalid(&format!("message {i} is empty")));
        }
        if m.position != i {
            return Err(invalid(&format!(
                "message positions not contiguous: expected {i}, got {}",
                m.position
            )));
        }
    }
    Ok(())
}

#[derive(Deserialize)]
struct JsonMessage {
    author_role: AuthorRole,
    text: String,
}

#[derive(Deserialize)]
struct JsonIncident {
    id: String,
    request_text: String,
    exchange: Vec<JsonMessage>,
    #[serde(default)]
    tags: Vec<String>,
}

const KNOWN_INCIDENT_FIELDS: &[&str] = &["id", "request_text", "exchange", "tags"];

fn load_jsonl(path: &Path) -> Result<Vec<Incident>, CorpusError> {
    let file = path.display().to_string();
    let raw = fs::read_to_string(path).map_err(|source| CorpusError::Io {
        path: file.clone(),
        source,
    })?;
    let mut incidents = Vec::new();
    for (lineno, line) in raw.lines().enumerate() {
        let line_num = lineno + 1;
        if line.trim().is_empty() {
            continue;
        }
        let malformed = |message: String| CorpusError::MalformedRecord {
            file: file.clone(),
            line: line_num,
            message,
        };
        let value: serde_json::Value =
            serde_json::from_str(line).map_err(|e| malformed(e.to_string()))?;
        if let Some(obj) = value.as_object() {
            for key in obj.keys() {
                if !KNOWN_INCIDENT_FIELDS.contains(&key.as_str()) {
                    log::warn!("{file}:{line_num}: ignoring unknown field \"{key}\"");
                }
            }
        }
        let rec: JsonIncident =
            serde_json::from_value(value).map_err(|e| malformed(e.to_string()))?;
        incidents.push(Incident {
            id: rec.id,
            request_text: rec.request_text,
            exchange: rec
                .exchange
                .into_iter()
                .enumerate()
                .map(|(position, m)| Message {
                    author_role: m.author_role,
                    text: m.text,
                    position,
                })
                .collect(),
            tags: rec.tags,
        });
    }
    Ok(incidents)
}

fn load_text_dir(path: &Path) -> Result<Vec<Incident>, CorpusError> {
    let dir = path.display().to_string();
    let mut files: Vec<_> = fs::read_dir(path)
        .map_err(|source| CorpusError::Io {
            path: dir.clone(),
            source,
        })?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|ext| ext == "txt"))
        .collect();
    files.sort();
    let mut incidents = Vec::new();
    for file in files {
        incidents.push(parse_text_incident(&file)?);
    }
    Ok(incidents)
}

fn parse_text_incident(file: &Path) -> Result<Incident, CorpusError> {
    let name = file.display().to_string();
    let raw = fs::read_to_string(file).map_err(|source| CorpusError::Io {
        path: name.clone(),
        source,
    })?;
    let id = file
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    let mut sections = Vec::new();
    let mut current: Vec<&str> = Vec::new();
    let mut section_start = 1usize;
    let mut lineno = 0usize;
    for line in raw.lines() {
        lineno += 1;
        if line.trim() == "---" {
            sections.push((section_start, current.join("\n")));
            current = Vec::new();
            section_start = lineno + 1;
        } else {
            current.push(line);
        }
    }
    sections.push((section_start, current.join("\n")));

    let request_text = sections[0].1.trim().to_string();
    let mut exchange = Vec::new();
    for (position, (start_line, body)) in sections.iter().skip(1).enumerate() {
        let body = body.trim();
        let malformed = |message: String| CorpusError::MalformedRecord {
            file: name.clone(),
            line: *start_line,
            message,
        };
        let (header, rest) = body
            .split_once('\n')
            .map(|(h, r)| (h.trim(), r))
            .unwrap_or((body, ""));
        let author_role = match header.to_ascii_lowercase().as_str() {
            "customer:" => AuthorRole::Customer,
            "agent:" => AuthorRole::Agent,
            other => {
                return Err(malformed(format!(
                    "expected role header \"customer:\" or \"agent:\", got \"{other}\""
                )))
            }
        };
        exchange.push(Message {
            author_role,
            text: rest.trim().to_string(),
            position,
        });
    }
    Ok(Incident {
        id,
        request_text,
        exchange,
        tags: Vec::new(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::io::Write;

    #[test]
    fn tokenize_empty() {
        assert!(tokenize("").is_empty());
    }

    #[test]
    fn tokenize_sentence() {
        let toks: Vec<String> = tokenize("restart the server.")
            .into_iter()
            .map(|t| t.text)
            .collect();
        assert_eq!(toks, ["restart", "the", "server", "."]);
    }

    #[test]
    fn tokenize_hyphenated() {
        let toks: Vec<String> = tokenize("e-mail").into_iter().map(|t| t.text).collect();
        assert_eq!(toks, ["e", "-", "mail"]);
    }

    #[test]
    fn tokenize_spans_slice_back() {
        let text = "reboot, then re-seat  the cable";
        for t in tokenize(text) {
            assert_eq!(&text[t.start..t.end], t.text);
        }
    }

    /// Reference splitter: alphanumeric runs or single other characters.
    fn oracle_tokens(text: &str) -> Vec<String> {
        let mut out = Vec::new();
        let mut run = String::new();
        for ch in text.chars() {
            if ch.is_alphanumeric() {
                run.push(ch);
            } else {
                if !run.is_empty() {
                    out.push(std::mem::take(&mut run));
                }
                if !ch.is_whitespace() {
                    out.push(ch.to_string());
                }
            }
        }
        if !run.is_empty() {
            out.push(run);
        }
        out
    }

    fn reconstruct(text: &str, tokens: &[Token]) -> String {
        let mut out = String::new();
        let mut cursor = 0usize;
        for t in tokens {
            out.push_str(&text[cursor..t.start]);
            out.push_str(&t.text);
            cursor = t.end;
        }
        out.push_str(&text[cursor..]);
        out
    }

    proptest! {
        #[test]
        fn tokenize_matches_oracle(text in "\\PC*") {
            let got: Vec<String> = tokenize(&text).into_iter().map(|t| t.text).collect();
            prop_assert_eq!(got, oracle_tokens(&text));
        }

        #[test]
        fn tokenize_round_trips(text in "\\PC*") {
            let tokens = tokenize(&text);
            prop_assert_eq!(reconstruct(&text, &tokens), text);
        }

        #[test]
        fn chunks_cover_all_tokens(
            words in proptest::collection::vec("[a-z]{1,8}", 0..400),
            size in 1usize..50,
            overlap_frac in 0usize..50,
        ) {
            let overlap = overlap_frac * size / 51;
            prop_assume!(overlap < size);
            let text = words.join(" ");
            let cfg = ChunkerConfig { chunk_size_tokens: size, overlap_tokens: overlap };
            let chunks = split_into_chunks("d", &text, &cfg).unwrap();
            let total = tokenize(&text).len();
            if total == 0 {
                prop_assert!(chunks.is_empty());
                return Ok(());
            }
            let mut covered = vec![false; total];
            for c in &chunks {
                prop_assert!(c.token_end > c.token_start);
                prop_assert!(c.token_end - c.token_start <= size);
                for i in c.token_start..c.token_end {
                    covered[i] = true;
                }
            }
            prop_assert!(covered.iter().all(|&c| c));
            for (i, c) in chunks.iter().enumerate() {
                prop_assert_eq!(c.seq, i);
            }
            for pair in chunks.windows(2) {
                prop_assert_eq!(pair[1].token_start, pair[0].token_start + (size - overlap));
                if pair[0].token_end - pair[0].token_start == size
                    && pair[1].token_end - pair[1].token_start == size
                {
                    prop_assert_eq!(pair[0].token_end - pair[1].token_start, overlap);
                }
            }
        }

        #[test]
        fn chunking_is_deterministic(
            words in proptest::collection::vec("[a-z]{1,8}", 1..200),
        ) {
            let text = words.join(" ");
            let cfg = ChunkerConfig { chunk_size_tokens: 16, overlap_tokens: 4 };
            let a = split_into_chunks("d", &text, &cfg).unwrap();
            let b = split_into_chunks("d", &text, &cfg).unwrap();
            prop_assert_eq!(a, b);
        }
    }

    #[test]
    fn word_count_cases() {
        assert_eq!(word_count(""), 0);
        assert_eq!(word_count("a  b\nc"), 3);
        assert_eq!(word_count("  leading and trailing  "), 3);
    }

    fn numbered_words(n: usize) -> String {
        (0..n).map(|i| format!("w{i}")).collect::<Vec<_>>().join(" ")
    }

    #[test]
    fn chunker_fixture_2500() {
        let text = numbered_words(2500);
        let cfg = ChunkerConfig::default();
        let chunks = split_into_chunks("doc", &text, &cfg).unwrap();
        let spans: Vec<(usize, usize)> =
            chunks.iter().map(|c| (c.token_start, c.token_end)).collect();
        assert_eq!(spans, [(0, 1000), (980, 1980), (1960, 2500)]);
    }

    #[test]
    fn chunker_exact_fit() {
        let text = numbered_words(1000);
        let chunks = split_into_chunks("doc", &text, &ChunkerConfig::default()).unwrap();
        assert_eq!(chunks.len(), 1);
        assert_eq!((chunks[0].token_start, chunks[0].token_end), (0, 1000));
    }

    #[test]
    fn chunker_short_text() {
        let text = numbered_words(500);
        let chunks = split_into_chunks("doc", &text, &ChunkerConfig::default()).unwrap();
        assert_eq!(chunks.len(), 1);
        assert_eq!((chunks[0].token_start, chunks[0].token_end), (0, 500));
    }

    #[test]
    fn chunker_rejects_bad_overlap() {
        let cfg = ChunkerConfig { chunk_size_tokens: 10, overlap_tokens: 10 };
        assert!(matches!(
            split_into_chunks("d", "a b c", &cfg),
            Err(CorpusError::InvalidChunker { .. })
        ));
    }

    #[test]
    fn chunk_text_preserves_source_slices() {
        let text = "alpha beta,  gamma\n\ndelta epsilon zeta";
        let cfg = ChunkerConfig { chunk_size_tokens: 3, overlap_tokens: 1 };
        let chunks = split_into_chunks("d", text, &cfg).unwrap();
        for c in &chunks {
            assert!(text.contains(&c.text));
        }
        assert_eq!(chunks[0].text, "alpha beta,");
    }

    fn write_jsonl(lines: &[&str]) -> tempfile::NamedTempFile {
        let mut f = tempfile::Builder::new().suffix(".jsonl").tempfile().unwrap();
        for l in lines {
            writeln!(f, "{l}").unwrap();
        }
        f.flush().unwrap();
        f
    }

    #[test]
    fn load_jsonl_happy_path() {
        let f = write_jsonl(&[
            r#"{"id":"Inc1","request_text":"printer offline","exchange":[{"author_role":"customer","text":"it will not print"},{"author_role":"agent","text":"power cycle it"}],"tags":["printer"]}"#,
            r#"{"id":"Inc2","request_text":"no network","exchange":[]}"#,
        ]);
        let corpus = load_corpus(f.path(), CorpusFormat::Jsonl).unwrap();
        assert_eq!(corpus.incidents.len(), 2);
        assert_eq!(corpus.incidents[0].id, "Inc1");
        assert_eq!(corpus.incidents[0].exchange.len(), 2);
        assert_eq!(corpus.incidents[0].exchange[1].position, 1);
        assert_eq!(corpus.incidents[0].exchange[1].author_role, AuthorRole::Agent);
        assert_eq!(corpus.incidents[1].tags.len(), 0);
    }

    #[test]
    fn load_jsonl_empty_file() {
        let f = write_jsonl(&[]);
        let corpus = load_corpus(f.path(), CorpusFormat::Jsonl).unwrap();
        assert!(corpus.incidents.is_empty());
    }

    #[test]
    fn load_jsonl_duplicate_id() {
        let f = write_jsonl(&[
            r#"{"id":"Inc3","request_text":"a","exchange":[]}"#,
            r#"{"id":"Inc3","request_text":"b","exchange":[]}"#,
        ]);
        let err = load_corpus(f.path(), CorpusFormat::Jsonl).unwrap_err();
        assert!(matches!(err, CorpusError::DuplicateId { ref id } if id == "Inc3"));
    }

    #[test]
    fn load_jsonl_malformed_names_line() {
        let f = write_jsonl(&[
            r#"{"id":"Inc1","request_text":"a","exchange":[]}"#,
            r#"{"id":"Inc2""#,
        ]);
        let err = load_corpus(f.path(), CorpusFormat::Jsonl).unwrap_err();
        match err {
            CorpusError::MalformedRecord { line, .. } => assert_eq!(line, 2),
            other => panic!("unexpected error: {other}"),
        }
    }

    #[test]
    fn load_jsonl_rejects_empty_message() {
        let f = write_jsonl(&[
            r#"{"id":"Inc1","request_text":"a","exchange":[{"author_role":"agent","text":"  "}]}"#,
        ]);
        let err = load_corpus(f.path(), CorpusFormat::Jsonl).unwrap_err();
        assert!(matches!(err, CorpusError::InvalidIncident { .. }));
    }

    #[test]
    fn load_jsonl_rejects_bad_role() {
        let f = write_jsonl(&[
            r#"{"id":"Inc1","request_text":"a","exchange":[{"author_role":"robot","text":"hi"}]}"#,
        ]);
        let err = load_corpus(f.path(), CorpusFormat::Jsonl).unwrap_err();
        assert!(matches!(err, CorpusError::MalformedRecord { line: 1, .. }));
    }

    #[test]
    fn load_text_dir_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(
            dir.path().join("Inc1.txt"),
            "The labeler prints blank tags.\n---\nagent:\nReload the ribbon cartridge.\n---\ncustomer:\nThat fixed it, thanks.\n",
        )
        .unwrap();
        std::fs::write(dir.path().join("Inc2.txt"), "Conveyor stops at random.\n").unwrap();
        let corpus = load_corpus(dir.path(), CorpusFormat::TextDir).unwrap();
        assert_eq!(corpus.incidents.len(), 2);
        let inc1 = &corpus.incidents[0];
        assert_eq!(inc1.id, "Inc1");
        assert_eq!(inc1.request_text, "The labeler prints blank tags.");
        assert_eq!(inc1.exchange.len(), 2);
        assert_eq!(inc1.exchange[0].author_role, AuthorRole::Agent);
        assert_eq!(inc1.exchange[1].text, "That fixed it, thanks.");
        assert!(corpus.incidents[1].exchange.is_empty());
    }

    #[test]
    fn load_text_dir_bad_header() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("Inc1.txt"), "request\n---\nnobody:\nhello\n").unwrap();
        let err = load_corpus(dir.path(), CorpusFormat::TextDir).unwrap_err();
        assert!(matches!(err, CorpusError::MalformedRecord { .. }));
    }

    #[test]
    fn incident_document_joins_with_blank_lines() {
        let inc = Incident {
            id: "Inc1".into(),
            request_text: "request".into(),
            exchange: vec![
                Message { author_role: AuthorRole::Customer, text: "first".into(), position: 0 },
                Message { author_role: AuthorRole::Agent, text: "second".into(), position: 1 },
            ],
            tags: vec![],
        };
        assert_eq!(inc.document(), "request\n\nfirst\n\nsecond");
    }
}
