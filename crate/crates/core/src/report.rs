//! Plain-text cleaning report.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt::Write;

use crate::series::{CleanResult, ErrorRow, Mechanism};
use crate::stats::summary_stats;
use crate::time::Instant;

/// Rows shown per listing before it is cut short.
pub const LISTING_CAP: usize = 40;

fn trim_zeros(s: String) -> String {
    if !s.contains('.') {
        return s;
    }
    let t = s.trim_end_matches('0').trim_end_matches('.');
    if t == "-0" {
        "0".into()
    } else {
        t.into()
    }
}

/// Fixed point with at most `decimals` places, trailing zeros removed.
pub fn format_fixed(v: f64, decimals: usize) -> String {
    if !v.is_finite() {
        return format!("{v}");
    }
    trim_zeros(format!("{v:.decimals$}"))
}

/// `%g`-style rendering with `digits` significant digits.
pub fn format_significant(v: f64, digits: usize) -> String {
    if v == 0.0 || !v.is_finite() {
        return if v == 0.0 { "0".into() } else { format!("{v}") };
    }
    let digits = digits.max(1);
    let sci = format!("{:.*e}", digits - 1, v);
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if exp < -4 || exp >= digits as i32 {
        format!("{}e{}{:02}", trim_zeros(mantissa.into()), if exp < 0 { '-' } else { '+' }, exp.abs())
    } else {
        let decimals = (digits as i32 - 1 - exp).max(0) as usize;
        trim_zeros(format!("{v:.decimals$}"))
    }
}

fn percent(n: usize, total: usize) -> String {
    if total == 0 {
        return "0".into();
    }
    format_fixed(100.0 * n as f64 / total as f64, 4)
}

/// Right-aligned table; the first column is a `N:` row label.
fn table(out: &mut String, header: &[&str], rows: &[Vec<String>], total: usize) {
    let label_width = format!("{}:", total.max(1)).len();
    let mut widths: Vec<usize> = header.iter().map(|h| h.len()).collect();
    for row in rows {
        for (w, cell) in widths.iter_mut().zip(row) {
            *w = (*w).max(cell.chars().count());
        }
    }
    let _ = write!(out, "{:label_width$}", "");
    for (h, w) in header.iter().zip(&widths) {
        let _ = write!(out, " {h:>w$}");
    }
    out.push('\n');
    for (i, row) in rows.iter().enumerate() {
        let _ = write!(out, "{:>label_width$}", format!("{}:", i + 1));
        for (cell, w) in row.iter().zip(&widths) {
            let _ = write!(out, " {cell:>w$}");
        }
        out.push('\n');
    }
    if total > rows.len() {
        let _ = writeln!(out, "… and {} more", total - rows.len());
    }
}

fn error_table(out: &mut String, row: &ErrorRow) {
    let scores: Vec<String> = row
        .entries()
        .iter()
        .map(|(_, s)| format_significant(*s, 6))
        .collect();
    let widths: Vec<usize> = row
        .entries()
        .iter()
        .zip(&scores)
        .map(|((id, _), s)| id.as_str().len().max(s.len()))
        .collect();
    for ((id, _), w) in row.entries().iter().zip(&widths) {
        let _ = write!(out, " {:>w$}", id.as_str());
    }
    out.push('\n');
    for (s, w) in scores.iter().zip(&widths) {
        let _ = write!(out, " {s:>w$}");
    }
    out.push('\n');
}

fn instant_listing(out: &mut String, instants: &[Instant]) {
    let rows: Vec<Vec<String>> = instants
        .iter()
        .take(LISTING_CAP)
        .map(|t| alloc::vec![t.to_display()])
        .collect();
    table(out, &["time"], &rows, instants.len());
}

fn value_or_na(v: Option<f64>) -> String {
    v.map_or_else(|| "NA".to_string(), |v| format_fixed(v, 4))
}

fn mechanism_section(out: &mut String, result: &CleanResult, mechanism: Mechanism) {
    let total = result.clean_data.len();
    let n = result.missing_count(Some(mechanism));
    let _ = writeln!(out, "## {mechanism}:  {n} ({}%)", percent(n, total));
    if n == 0 {
        let _ = writeln!(out, "No {mechanism} found.");
        out.push('\n');
        return;
    }
    let errors = match mechanism {
        Mechanism::Mcar => &result.mcar_err,
        Mechanism::Mar => &result.mar_err,
    };
    match errors {
        Some(row) => {
            let _ = writeln!(out, " {mechanism} Errors:");
            error_table(out, row);
        }
        None => {
            let _ = writeln!(out, " {mechanism} Errors: benchmark not run");
        }
    }
    out.push('\n');
    let rows: Vec<Vec<String>> = result
        .clean_data
        .iter()
        .filter(|p| p.missing_type == Some(mechanism))
        .take(LISTING_CAP)
        .map(|p| {
            alloc::vec![
                p.time.to_display(),
                value_or_na(p.value),
                p.method_used.as_ref().map_or("NA", |m| m.as_str()).to_string(),
            ]
        })
        .collect();
    table(out, &["time", "value", "method_used"], &rows, n);
    out.push('\n');
}

fn outlier_error_section(out: &mut String, title: &str, row: &Option<ErrorRow>) {
    let _ = writeln!(out, "### {title} errors:");
    match row {
        Some(row) => error_table(out, row),
        None => {
            let _ = writeln!(out, "No {title} errors found.");
        }
    }
}

/// Renders the cleaning report.
pub fn generate_report(result: &CleanResult) -> String {
    let mut out = String::new();
    let total = result.clean_data.len();

    out.push_str("# Summary of cleaned data:\n");
    match summary_stats(result.clean_data.iter().map(|p| &p.value)) {
        Some(s) => {
            let cells: Vec<String> = [s.min, s.q1, s.median, s.mean, s.q3, s.max]
                .iter()
                .map(|v| format_significant(*v, 6))
                .collect();
            let header = ["Min.", "1st Qu.", "Median", "Mean", "3rd Qu.", "Max."];
            let widths: Vec<usize> = header
                .iter()
                .zip(&cells)
                .map(|(h, c)| h.len().max(c.len()))
                .collect();
            for (h, w) in header.iter().zip(&widths) {
                let _ = write!(out, " {h:>w$}");
            }
            out.push('\n');
            for (c, w) in cells.iter().zip(&widths) {
                let _ = write!(out, " {c:>w$}");
            }
            out.push('\n');
        }
        None => out.push_str("No values.\n"),
    }
    out.push('\n');

    let _ = writeln!(out, "# Missing timestamps:  {}", result.missing_ts.len());
    if result.missing_ts.is_empty() {
        out.push_str("No missing timestamps found.\n");
    } else {
        instant_listing(&mut out, &result.missing_ts);
    }
    out.push('\n');

    let _ = writeln!(out, "# Duplicate timestamps:  {}", result.duplicate_ts.len());
    if result.duplicate_ts.is_empty() {
        out.push_str("No duplicate timestamps found.\n");
    } else {
        instant_listing(&mut out, &result.duplicate_ts);
    }
    out.push('\n');

    let missing = result.missing_count(None);
    let _ = writeln!(out, "# Missing Values:  {missing} ({}%)", percent(missing, total));
    if missing == 0 {
        out.push_str("No missing values found.\n");
    }
    out.push('\n');
    mechanism_section(&mut out, result, Mechanism::Mcar);
    mechanism_section(&mut out, result, Mechanism::Mar);

    let _ = writeln!(out, "# Outliers:  {}", result.outliers.len());
    if result.outliers.is_empty() {
        out.push_str("No outliers found.\n");
    } else {
        let rows: Vec<Vec<String>> = result
            .outliers
            .iter()
            .take(LISTING_CAP)
            .map(|o| {
                alloc::vec![
                    o.time.to_display(),
                    format_fixed(o.value, 4),
                    format_fixed(o.orig_value, 4),
                    o.method_used.as_ref().map_or("NA", |m| m.as_str()).to_string(),
                ]
            })
            .collect();
        table(
            &mut out,
            &["time", "value", "orig_value", "method_used"],
            &rows,
            result.outliers.len(),
        );
    }
    out.push('\n');

    out.push_str("## Imputation errors while replacing outliers:\n");
    outlier_error_section(&mut out, "MCAR", &result.outlier_mcar_err);
    outlier_error_section(&mut out, "MAR", &result.outlier_mar_err);
    out
}
