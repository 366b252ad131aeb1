//! Convergence tables as CSV.
//!
//! Header `N, <norms>, eoc_<norms>`; every number is written as `{:.3e}`
//! (four significant digits). Missing values are left blank.

use std::fs;
use std::path::Path;

use crate::verification::{ErrorReport, COLUMNS};
use crate::{Error, Result};

fn number(x: Option<f64>) -> String {
    x.map(|v| format!("{v:.3e}")).unwrap_or_default()
}

fn header() -> Vec<String> {
    let mut h = vec!["N".to_string()];
    h.extend(COLUMNS.iter().map(|c| c.to_string()));
    h.extend(COLUMNS.iter().map(|c| format!("eoc_{c}")));
    h
}

fn cells(report: &ErrorReport) -> Vec<Vec<String>> {
    let eocs: Vec<Vec<Option<f64>>> = COLUMNS.iter().map(|c| report.eoc(c)).collect();
    report
        .rows
        .iter()
        .enumerate()
        .map(|(k, row)| {
            let mut line = vec![row.n.to_string()];
            line.extend(COLUMNS.iter().map(|c| number(row.norms.and_then(|n| n.get(c)))));
            line.extend(eocs.iter().map(|e| number(e[k])));
            line
        })
        .collect()
}

/// CSV text of a report.
pub fn convergence_csv(report: &ErrorReport) -> Result<String> {
    if report.rows.is_empty() {
        return Err(Error::InvalidParameter { name: "report", reason: "no rows to write".into() });
    }
    let mut out = header().join(",");
    out.push('\n');
    for line in cells(report) {
        out.push_str(&line.join(","));
        out.push('\n');
    }
    Ok(out)
}

pub fn write_convergence_csv(report: &ErrorReport, path: &Path) -> Result<()> {
    let text = convergence_csv(report)?;
    fs::write(path, text).map_err(|source| Error::Io { path: path.to_path_buf(), source })
}

/// Aligned plain-text rendering of the same table.
pub fn render_pretty(report: &ErrorReport) -> String {
    let mut table = vec![header()];
    table.extend(cells(report));
    let widths: Vec<usize> = (0..table[0].len()).map(|j| table.iter().map(|r| r[j].len()).max().unwrap_or(0)).collect();
    let mut out = format!("example {}  alpha {:e}  ctilde {}\n", report.example, report.alpha, report.ctilde);
    for row in table {
        let line: Vec<String> = row.iter().zip(&widths).map(|(c, w)| format!("{c:>w$}")).collect();
        out.push_str(line.join("  ").trim_end());
        out.push('\n');
    }
    out
}
