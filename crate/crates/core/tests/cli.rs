//! End-to-end tests for the service-rag binary: exit codes, stdout/stderr
//! contracts, report files on disk, and help-text goldens.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use service_rag::index::VectorIndex;
use service_rag::vectors::{MOCK_DIM, MOCK_MODEL_ID};

fn bin() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_service-rag"));
    // Keep host credentials from leaking into provider selection.
    cmd.env_remove("SERVICE_RAG_API_KEY").env_remove("SERVICE_RAG_BASE_URL");
    cmd
}

fn fixture(path: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests").join(path)
}

fn corpus() -> PathBuf {
    fixture("fixtures/corpus.jsonl")
}

fn stdout_of(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn stderr_of(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("process exited normally")
}

/// Build a mock-embedded index over the fixture corpus inside `dir`.
fn build_index(dir: &Path) -> PathBuf {
    let index_path = dir.join("corpus.idx");
    let out = bin()
        .args(["--provider", "mock", "index"])
        .arg(corpus())
        .arg("--index")
        .arg(&index_path)
        .output()
        .unwrap();
    assert_eq!(code(&out), 0, "index build failed: {}", stderr_of(&out));
    assert!(index_path.exists());
    index_path
}

fn golden_check(name: &str, rendered: &str) {
    let path = fixture(&format!("golden/{name}"));
    if std::env::var_os("UPDATE_GOLDENS").is_some() {
        std::fs::write(&path, rendered).unwrap();
        return;
    }
    let want = std::fs::read_to_string(&path)
        .unwrap_or_else(|e| panic!("missing golden {path:?}: {e}; rerun with UPDATE_GOLDENS=1"));
    assert_eq!(rendered, want, "{name} drifted; rerun with UPDATE_GOLDENS=1 if intentional");
}

#[test]
fn help_text_is_stable() {
    let out = bin().arg("--help").output().unwrap();
    assert_eq!(code(&out), 0);
    golden_check("help_main.txt", &stdout_of(&out));

    let out = bin().args(["eval", "--help"]).output().unwrap();
    assert_eq!(code(&out), 0);
    golden_check("help_eval.txt", &stdout_of(&out));
}

#[test]
fn version_prints_and_exits_zero() {
    let out = bin().arg("--version").output().unwrap();
    assert_eq!(code(&out), 0);
    assert!(stdout_of(&out).contains(env!("CARGO_PKG_VERSION")));
}

#[test]
fn unknown_flag_is_usage_error() {
    let out = bin().arg("--definitely-not-a-flag").output().unwrap();
    assert_eq!(code(&out), 1);
}

#[test]
fn ingest_reports_corpus_shape() {
    let out = bin().arg("ingest").arg(corpus()).output().unwrap();
    assert_eq!(code(&out), 0, "{}", stderr_of(&out));
    let stdout = stdout_of(&out);
    assert!(stdout.contains("15 incidents"), "unexpected stdout: {stdout}");
    assert!(stdout.contains("Inc1"));
}

#[test]
fn ingest_rejects_duplicate_ids() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("dup.jsonl");
    let row = r#"{"id":"Inc1","request_text":"pump is down","exchange":[{"author_role":"customer","text":"pump is down"}]}"#;
    std::fs::write(&path, format!("{row}\n{row}\n")).unwrap();
    let out = bin().arg("ingest").arg(&path).output().unwrap();
    assert_eq!(code(&out), 2);
    assert!(stderr_of(&out).contains("Inc1"), "stderr must name the duplicate id");
}

#[test]
fn ask_with_missing_index_names_the_path() {
    let out = bin()
        .args(["--provider", "mock", "ask", "why does the belt drift?", "--index"])
        .arg("/nonexistent/corpus.idx")
        .output()
        .unwrap();
    assert_eq!(code(&out), 2);
    assert!(stderr_of(&out).contains("/nonexistent/corpus.idx"));
}

#[test]
fn index_then_ask_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let index_path = build_index(dir.path());
    let out = bin()
        .args(["--provider", "mock", "ask", "labels are jamming at the roll end", "--index"])
        .arg(&index_path)
        .output()
        .unwrap();
    assert_eq!(code(&out), 0, "{}", stderr_of(&out));
    assert!(!stdout_of(&out).trim().is_empty(), "answer text goes to stdout");
    assert!(!stderr_of(&out).contains("answered: false"));
}

#[test]
fn ask_says_so_when_nothing_is_known() {
    let dir = tempfile::tempdir().unwrap();
    let index_path = dir.path().join("empty.idx");
    VectorIndex::new(MOCK_MODEL_ID, MOCK_DIM).save(&index_path).unwrap();
    let out = bin()
        .args(["--provider", "mock", "ask", "how do I fix the crusher?", "--index"])
        .arg(&index_path)
        .output()
        .unwrap();
    assert_eq!(code(&out), 0, "unanswered is not an error: {}", stderr_of(&out));
    assert_eq!(stdout_of(&out).trim(), "I don't know");
    assert!(stderr_of(&out).contains("answered: false"));
}

#[test]
fn ask_with_zero_k_is_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let index_path = build_index(dir.path());
    let out = bin()
        .args(["--provider", "mock", "ask", "anything", "--k", "0", "--index"])
        .arg(&index_path)
        .output()
        .unwrap();
    assert_eq!(code(&out), 1);
}

#[test]
fn remote_provider_without_credentials_is_provider_error() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("note.txt");
    std::fs::write(&input, "teh pump is braking down\n").unwrap();
    let out = bin().arg("correct").arg(&input).output().unwrap();
    assert_eq!(code(&out), 3, "stderr: {}", stderr_of(&out));
}

#[test]
fn correct_writes_output_file() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("note.txt");
    std::fs::write(&input, "teh pump is braking down\n").unwrap();
    let output = dir.path().join("fixed.txt");
    let out = bin()
        .args(["--provider", "mock", "correct"])
        .arg(&input)
        .arg("-o")
        .arg(&output)
        .output()
        .unwrap();
    assert_eq!(code(&out), 0, "{}", stderr_of(&out));
    let fixed = std::fs::read_to_string(&output).unwrap();
    assert!(!fixed.trim().is_empty());
}

#[test]
fn summarize_requires_word_target() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("report.txt");
    std::fs::write(&input, "the line stopped twice today\n").unwrap();

    let out = bin().args(["--provider", "mock", "summarize"]).arg(&input).output().unwrap();
    assert_eq!(code(&out), 1, "missing --words is a usage error");

    let out = bin()
        .args(["--provider", "mock", "summarize"])
        .arg(&input)
        .args(["--words", "20"])
        .output()
        .unwrap();
    assert_eq!(code(&out), 0, "{}", stderr_of(&out));
    assert!(!stdout_of(&out).trim().is_empty());
}

#[test]
fn eval_retrieval_sweep_writes_stable_reports() {
    let dir = tempfile::tempdir().unwrap();
    let index_path = build_index(dir.path());
    let out_dir = dir.path().join("reports");
    let run = |out_dir: &Path| {
        let out = bin()
            .args(["--provider", "mock", "--out-dir"])
            .arg(out_dir)
            .args(["eval", "retrieval", "--index"])
            .arg(&index_path)
            .arg("--queries")
            .arg(fixture("fixtures/queries.jsonl"))
            .args(["--k-sweep", "1,2,3"])
            .output()
            .unwrap();
        assert_eq!(code(&out), 0, "{}", stderr_of(&out));
    };
    run(&out_dir);
    for ext in ["csv", "md", "json"] {
        assert!(out_dir.join(format!("retrieval.{ext}")).exists());
    }
    let csv = std::fs::read_to_string(out_dir.join("retrieval.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines.len(), 4, "header plus one row per k:\n{csv}");
    assert_eq!(lines[0], "k,average_proportion");
    assert!(lines[1].starts_with("1,"));

    // A second run over the same inputs must reproduce every byte.
    let out_dir2 = dir.path().join("reports2");
    run(&out_dir2);
    for ext in ["csv", "md", "json"] {
        let a = std::fs::read(out_dir.join(format!("retrieval.{ext}"))).unwrap();
        let b = std::fs::read(out_dir2.join(format!("retrieval.{ext}"))).unwrap();
        assert_eq!(a, b, "retrieval.{ext} is not reproducible");
    }
}

#[test]
fn eval_correction_writes_table() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("reports");
    let out = bin()
        .args(["--provider", "mock", "--out-dir"])
        .arg(&out_dir)
        .args(["eval", "correction", "--errors", "5", "--seed", "7"])
        .arg(fixture("fixtures/replies/inc1.txt"))
        .arg(fixture("fixtures/replies/inc2.txt"))
        .output()
        .unwrap();
    assert_eq!(code(&out), 0, "{}", stderr_of(&out));
    let csv = std::fs::read_to_string(out_dir.join("correction.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines.len(), 3);
    assert_eq!(lines[0], "incident,words_original,errors_injected,words_final,errors_removed");
    // The mock provider echoes the corrupted text, so nothing gets fixed.
    assert!(lines[1].starts_with("inc1,172,5,172,0"), "row: {}", lines[1]);
    assert!(lines[2].starts_with("inc2,153,5,153,0"), "row: {}", lines[2]);
}

#[test]
fn eval_answers_writes_matrix() {
    let dir = tempfile::tempdir().unwrap();
    let index_path = build_index(dir.path());
    let out_dir = dir.path().join("reports");
    let out = bin()
        .args(["--provider", "mock", "--out-dir"])
        .arg(&out_dir)
        .args(["eval", "answers", "--index"])
        .arg(&index_path)
        .arg("--queries")
        .arg(fixture("fixtures/queries.jsonl"))
        .output()
        .unwrap();
    assert_eq!(code(&out), 0, "{}", stderr_of(&out));
    let csv = std::fs::read_to_string(out_dir.join("answers_matrix.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines.len(), 16, "header plus one row per incident:\n{}", lines.join("\n"));
    assert!(lines[0].starts_with("incident,q1,"));
}

#[test]
fn config_file_with_unknown_key_names_it() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("service.toml");
    std::fs::write(&cfg, "retreiver_k = 3\n").unwrap();
    let out = bin().arg("--config").arg(&cfg).arg("ingest").arg(corpus()).output().unwrap();
    assert_eq!(code(&out), 2);
    assert!(stderr_of(&out).contains("retreiver_k"), "stderr: {}", stderr_of(&out));
}

#[test]
fn paraphrase_writes_query_file() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("reports");
    let out = bin()
        .args(["--provider", "mock", "--out-dir"])
        .arg(&out_dir)
        .args(["paraphrase", "Inc3", "--corpus"])
        .arg(corpus())
        .args(["--n", "2"])
        .output()
        .unwrap();
    assert_eq!(code(&out), 0, "{}", stderr_of(&out));
    let path = out_dir.join("queries_Inc3.jsonl");
    let body = std::fs::read_to_string(&path).unwrap();
    let rows: Vec<&str> = body.lines().collect();
    assert_eq!(rows.len(), 2);
    for (i, row) in rows.iter().enumerate() {
        let v: serde_json::Value = serde_json::from_str(row).unwrap();
        assert_eq!(v["query_id"], format!("Inc3-p{}", i + 1));
        assert_eq!(v["truth_incident_id"], "Inc3");
        assert!(v["text"].as_str().is_some_and(|t| !t.is_empty()));
    }
}
