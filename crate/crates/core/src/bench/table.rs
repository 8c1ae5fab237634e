use std::fmt::Write;

use super::BenchResult;
use crate::error::{BridgeError, ErrorKind, Result};

pub const CSV_HEADER: &str = "name,direction,iters,total_ns,per_op_ns,per_elt_ns";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Report {
    pub table: String,
    pub csv: String,
}

fn row(r: &BenchResult) -> [String; 6] {
    [
        r.name.clone(),
        r.direction.name().to_string(),
        r.iters.to_string(),
        r.total_ns.to_string(),
        format!("{:.1}", r.per_op_ns),
        r.per_elt_ns.map(|x| format!("{x:.2}")).unwrap_or_default(),
    ]
}

/// Renders results as a column-aligned table and as CSV, in input order.
pub fn emit_table(results: &[BenchResult]) -> Result<Report> {
    if results.is_empty() {
        return Err(BridgeError::host(
            ErrorKind::DomainError,
            "no benchmark results to report",
        ));
    }
    let rows: Vec<[String; 6]> = results.iter().map(row).collect();

    let mut csv = String::from(CSV_HEADER);
    csv.push('\n');
    for r in &rows {
        csv.push_str(&r.join(","));
        csv.push('\n');
    }

    let header: Vec<&str> = CSV_HEADER.split(',').collect();
    let mut widths: Vec<usize> = header.iter().map(|h| h.len()).collect();
    for r in &rows {
        for (w, cell) in widths.iter_mut().zip(r) {
            *w = (*w).max(cell.len());
        }
    }
    let mut table = String::new();
    let line = |out: &mut String, cells: &[&str]| {
        let mut text = String::new();
        for (i, (cell, w)) in cells.iter().zip(&widths).enumerate() {
            if i > 0 {
                text.push_str("  ");
            }
            // Names and directions read left to right; numbers line up on the right.
            if i < 2 {
                let _ = write!(text, "{cell:<w$}");
            } else {
                let _ = write!(text, "{cell:>w$}");
            }
        }
        out.push_str(text.trim_end());
        out.push('\n');
    };
    line(&mut table, &header);
    let rule: Vec<String> = widths.iter().map(|w| "-".repeat(*w)).collect();
    line(&mut table, &rule.iter().map(String::as_str).collect::<Vec<_>>());
    for r in &rows {
        line(&mut table, &r.iter().map(String::as_str).collect::<Vec<_>>());
    }
    Ok(Report { table, csv })
}
