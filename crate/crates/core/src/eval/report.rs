//! Rendering of evaluation results as CSV, Markdown, or JSON.

use serde::Serialize;

use super::{AnswerDistanceMatrix, CorrectionReport, RetrievalEvalReport, SummaryReport};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Csv,
    Markdown,
    Json,
}

impl ReportFormat {
    pub fn extension(&self) -> &'static str {
        match self {
            ReportFormat::Csv => "csv",
            ReportFormat::Markdown => "md",
            ReportFormat::Json => "json",
        }
    }
}

/// Retrieval results across one or more k values, one table row per k.
#[derive(Debug, Clone, Default, Serialize)]
pub struct RetrievalReport {
    pub rows: Vec<RetrievalEvalReport>,
}

#[derive(Debug, Clone)]
pub enum EvalReport {
    Correction(CorrectionReport),
    Summaries(SummaryReport),
    Retrieval(RetrievalReport),
    Answers(AnswerDistanceMatrix),
}

/// Render a report deterministically. Similarities and distances use two
/// decimals, proportions render as whole percents, and every output ends
/// with a newline.
pub fn render_report(report: &EvalReport, format: ReportFormat) -> String {
    match (report, format) {
        (EvalReport::Correction(r), ReportFormat::Csv) => correction_csv(r),
        (EvalReport::Correction(r), ReportFormat::Markdown) => correction_md(r),
        (EvalReport::Correction(r), ReportFormat::Json) => json(r),
        (EvalReport::Summaries(r), ReportFormat::Csv) => summaries_csv(r),
        (EvalReport::Summaries(r), ReportFormat::Markdown) => summaries_md(r),
        (EvalReport::Summaries(r), ReportFormat::Json) => json(r),
        (EvalReport::Retrieval(r), ReportFormat::Csv) => retrieval_csv(r),
        (EvalReport::Retrieval(r), ReportFormat::Markdown) => retrieval_md(r),
        (EvalReport::Retrieval(r), ReportFormat::Json) => json(r),
        (EvalReport::Answers(m), ReportFormat::Csv) => answers_csv(m),
        (EvalReport::Answers(m), ReportFormat::Markdown) => answers_md(m),
        (EvalReport::Answers(m), ReportFormat::Json) => json(m),
    }
}

fn json<T: Serialize>(value: &T) -> String {
    let mut out = serde_json::to_string_pretty(value).expect("report types serialize");
    out.push('\n');
    out
}

fn csv_field(raw: &str) -> String {
    if raw.contains(',') || raw.contains('"') || raw.contains('\n') || raw.contains('\r') {
        format!("\"{}\"", raw.replace('"', "\"\""))
    } else {
        raw.to_string()
    }
}

fn csv_rows(header: &[&str], rows: &[Vec<String>]) -> String {
    let mut out = String::new();
    out.push_str(&header.join(","));
    out.push('\n');
    for row in rows {
        let escaped: Vec<String> = row.iter().map(|f| csv_field(f)).collect();
        out.push_str(&escaped.join(","));
        out.push('\n');
    }
    out
}

fn md_table(header: &[&str], rows: &[Vec<String>]) -> String {
    let mut out = String::new();
    out.push_str("| ");
    out.push_str(&header.join(" | "));
    out.push_str(" |\n|");
    for _ in header {
        out.push_str(" --- |");
    }
    out.push('\n');
    for row in rows {
        out.push_str("| ");
        out.push_str(&row.join(" | "));
        out.push_str(" |\n");
    }
    out
}

fn two_decimals(x: f64) -> String {
    format!("{x:.2}")
}

fn whole_percent(fraction: f64) -> String {
    format!("{}%", (fraction * 100.0).round() as i64)
}

fn correction_cells(report: &CorrectionReport) -> Vec<Vec<String>> {
    report
        .rows
        .iter()
        .map(|r| {
            vec![
                r.incident_id.clone(),
                r.words_original.to_string(),
                r.errors_injected.to_string(),
                r.words_final.to_string(),
                r.errors_removed.to_string(),
            ]
        })
        .collect()
}

const CORRECTION_HEADER: [&str; 5] =
    ["incident", "words_original", "errors_injected", "words_final", "errors_removed"];

fn correction_csv(report: &CorrectionReport) -> String {
    csv_rows(&CORRECTION_HEADER, &correction_cells(report))
}

fn correction_md(report: &CorrectionReport) -> String {
    md_table(&CORRECTION_HEADER, &correction_cells(report))
}

fn summaries_cells(report: &SummaryReport) -> Vec<Vec<String>> {
    report
        .rows
        .iter()
        .map(|r| {
            vec![
                r.incident_id.clone(),
                r.target_words.to_string(),
                r.summary_words.to_string(),
                two_decimals(r.cs),
                two_decimals(r.time_saved_min),
            ]
        })
        .collect()
}

const SUMMARY_HEADER: [&str; 5] =
    ["incident", "target_words", "summary_words", "cs", "time_saved_min"];

fn summaries_csv(report: &SummaryReport) -> String {
    csv_rows(&SUMMARY_HEADER, &summaries_cells(report))
}

fn summaries_md(report: &SummaryReport) -> String {
    md_table(&SUMMARY_HEADER, &summaries_cells(report))
}

fn retrieval_cells(report: &RetrievalReport) -> Vec<Vec<String>> {
    report
        .rows
        .iter()
        .map(|r| vec![r.k.to_string(), whole_percent(r.average_proportion)])
        .collect()
}

const RETRIEVAL_HEADER: [&str; 2] = ["k", "average_proportion"];

fn retrieval_csv(report: &RetrievalReport) -> String {
    csv_rows(&RETRIEVAL_HEADER, &retrieval_cells(report))
}

fn retrieval_md(report: &RetrievalReport) -> String {
    md_table(&RETRIEVAL_HEADER, &retrieval_cells(report))
}

fn answers_cells(matrix: &AnswerDistanceMatrix) -> (Vec<String>, Vec<Vec<String>>) {
    let mut header = vec!["incident".to_string()];
    header.extend(matrix.cols.iter().cloned());
    let rows: Vec<Vec<String>> = matrix
        .rows
        .iter()
        .enumerate()
        .map(|(r, incident)| {
            let mut row = vec![incident.clone()];
            row.extend(matrix.cells[r].iter().map(|&d| two_decimals(d)));
            row
        })
        .collect();
    (header, rows)
}

fn answers_csv(matrix: &AnswerDistanceMatrix) -> String {
    let (header, rows) = answers_cells(matrix);
    let header_refs: Vec<&str> = header.iter().map(String::as_str).collect();
    csv_rows(&header_refs, &rows)
}

fn answers_md(matrix: &AnswerDistanceMatrix) -> String {
    let (header, rows) = answers_cells(matrix);
    let header_refs: Vec<&str> = header.iter().map(String::as_str).collect();
    let mut out = md_table(&header_refs, &rows);
    out.push('\n');
    out.push_str(&format!(
        "Mean distance to the correct incident: {}. Mean distance to the nearest irrelevant incident: {}.\n",
        two_decimals(matrix.diagonal_mean),
        two_decimals(matrix.nearest_offdiagonal_mean),
    ));
    out
}
