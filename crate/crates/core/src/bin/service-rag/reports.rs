use std::path::{Path, PathBuf};

use service_rag::eval::{render_report, EvalReport, ReportFormat};

use crate::errors::{data_io, CliError};

/// Write a file through a temp + rename so readers never observe a
/// partial report.
pub fn atomic_write(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let tmp = path.with_extension(format!(
        "{}.tmp-{}",
        path.extension().and_then(|e| e.to_str()).unwrap_or("out"),
        std::process::id()
    ));
    std::fs::write(&tmp, bytes).map_err(|e| data_io("write", &tmp, &e))?;
    std::fs::rename(&tmp, path).map_err(|e| {
        let _ = std::fs::remove_file(&tmp);
        data_io("replace", path, &e)
    })
}

/// Render a report in all three formats into `out_dir/<base>.{csv,md,json}`.
pub fn write_report_files(
    out_dir: &Path,
    base: &str,
    report: &EvalReport,
) -> Result<Vec<PathBuf>, CliError> {
    std::fs::create_dir_all(out_dir).map_err(|e| data_io("create", out_dir, &e))?;
    let mut paths = Vec::new();
    for format in [ReportFormat::Csv, ReportFormat::Markdown, ReportFormat::Json] {
        let rendered = render_report(report, format);
        let path = out_dir.join(format!("{base}.{}", format.extension()));
        atomic_write(&path, rendered.as_bytes())?;
        paths.push(path);
    }
    Ok(paths)
}
