use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::verify::McReport;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReportFormat {
    Jsonl,
    Table,
    Csv,
}

impl ReportFormat {
    pub fn extension(self) -> &'static str {
        match self {
            ReportFormat::Jsonl => "jsonl",
            ReportFormat::Table => "txt",
            ReportFormat::Csv => "csv",
        }
    }
}

const COLUMNS: [&str; 10] = [
    "check",
    "estimate",
    "target",
    "stderr",
    "allowance",
    "rule",
    "pass",
    "samples",
    "grid",
    "seed",
];

/// 17 significant digits; JSON has no literal for non-finite values.
fn json_number(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        "null".into()
    }
}

fn csv_number(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        format!("{v}")
    }
}

fn json_string(s: &str) -> String {
    serde_json::to_string(s).expect("strings serialize")
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// Writes `reports` in the requested format. Field order is fixed; an empty
/// report produces an empty JSON-lines stream or a header-only table or CSV.
pub fn emit_report(reports: &[McReport], format: ReportFormat, w: &mut impl Write) -> std::io::Result<()> {
    match format {
        ReportFormat::Jsonl => {
            for r in reports {
                writeln!(
                    w,
                    "{{\"check\":{},\"estimate\":{},\"target\":{},\"stderr\":{},\"allowance\":{},\"rule\":{},\"pass\":{},\"samples\":{},\"grid\":{},\"seed\":{}}}",
                    json_string(&r.check),
                    json_number(r.estimate),
                    json_number(r.target),
                    json_number(r.stderr),
                    json_number(r.allowance),
                    json_string(&r.rule),
                    r.pass,
                    r.samples,
                    r.grid,
                    r.seed
                )?;
            }
        }
        ReportFormat::Csv => {
            writeln!(w, "{}", COLUMNS.join(","))?;
            for r in reports {
                writeln!(
                    w,
                    "{},{},{},{},{},{},{},{},{},{}",
                    csv_field(&r.check),
                    csv_number(r.estimate),
                    csv_number(r.target),
                    csv_number(r.stderr),
                    csv_number(r.allowance),
                    csv_field(&r.rule),
                    r.pass,
                    r.samples,
                    r.grid,
                    r.seed
                )?;
            }
        }
        ReportFormat::Table => {
            let header = [
                "check",
                "estimate",
                "target",
                "stderr",
                "allowance",
                "samples",
                "result",
            ];
            let rows: Vec<[String; 7]> = reports
                .iter()
                .map(|r| {
                    [
                        r.check.clone(),
                        format!("{:.6e}", r.estimate),
                        format!("{:.6e}", r.target),
                        format!("{:.3e}", r.stderr),
                        format!("{:.3e}", r.allowance),
                        r.samples.to_string(),
                        if r.pass { "PASS" } else { "FAIL" }.to_string(),
                    ]
                })
                .collect();
            let mut width: Vec<usize> = header.iter().map(|h| h.len()).collect();
            for row in &rows {
                for (k, cell) in row.iter().enumerate() {
                    width[k] = width[k].max(cell.chars().count());
                }
            }
            let line = |cells: Vec<&str>| {
                cells
                    .iter()
                    .enumerate()
                    .map(|(k, c)| {
                        if k == 0 {
                            format!("{c:<w$}", w = width[k])
                        } else {
                            format!("{c:>w$}", w = width[k])
                        }
                    })
                    .collect::<Vec<_>>()
                    .join("  ")
            };
            writeln!(w, "{}", line(header.to_vec()))?;
            for row in &rows {
                writeln!(w, "{}", line(row.iter().map(String::as_str).collect()))?;
            }
        }
    }
    Ok(())
}

/// Writes `<dir>/<stem>.<ext>` for each format and returns the paths.
pub fn write_reports(reports: &[McReport], dir: &Path, stem: &str, formats: &[ReportFormat]) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir)?;
    let mut out = Vec::new();
    for f in formats {
        let path = dir.join(format!("{stem}.{}", f.extension()));
        let mut file = std::io::BufWriter::new(std::fs::File::create(&path)?);
        emit_report(reports, *f, &mut file)?;
        file.flush()?;
        out.push(path);
    }
    Ok(out)
}

/// Parses JSON-lines output back into reports.
pub fn parse_jsonl(text: &str) -> Result<Vec<McReport>> {
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .enumerate()
        .map(|(i, l)| {
            serde_json::from_str(l).map_err(|e| crate::Error::Parse {
                path: format!("line {}", i + 1),
                message: e.to_string(),
            })
        })
        .collect()
}
