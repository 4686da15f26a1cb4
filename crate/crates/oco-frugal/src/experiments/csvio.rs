//! Sweep rows as CSV: a pinned header, ten-significant-digit reals, and a
//! parser that round-trips the emitted bytes.

use std::fmt::Write as _;
use std::path::Path;

use crate::algorithm::Setting;
use crate::error::{Error, Result};
use crate::experiments::SweepRow;

/// The column set, in order. Emission and parsing both pin this exact line.
pub const CSV_HEADER: &str = "setting,M,L,G,alpha,seed,T,total_cost,opt_cost,\
opt_error_bound,ratio,ratio_lo,theorem_bound,checks_passed";

/// Ten significant digits in scientific notation; infinities print as
/// `inf`/`-inf` and a failed cell's missing values as `NaN`, all of which
/// [`parse_csv`] reads back.
fn fmt_real(v: f64) -> String {
    if v.is_nan() {
        "NaN".to_string()
    } else if v == f64::INFINITY {
        "inf".to_string()
    } else if v == f64::NEG_INFINITY {
        "-inf".to_string()
    } else {
        format!("{v:.9e}")
    }
}

/// Renders rows (sorted by `(setting, M, L, seed)`) into CSV text.
pub fn render_csv(rows: &[SweepRow]) -> String {
    let mut sorted: Vec<&SweepRow> = rows.iter().collect();
    sorted.sort_by(|a, b| {
        (a.setting.name(), a.m.to_bits(), a.l.to_bits(), a.seed).cmp(&(
            b.setting.name(),
            b.m.to_bits(),
            b.l.to_bits(),
            b.seed,
        ))
    });
    let mut out = String::with_capacity(64 + 160 * rows.len());
    out.push_str(CSV_HEADER);
    out.push('\n');
    for r in sorted {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            r.setting.name(),
            fmt_real(r.m),
            fmt_real(r.l),
            fmt_real(r.g),
            fmt_real(r.alpha),
            r.seed,
            r.t,
            fmt_real(r.total_cost),
            fmt_real(r.opt_cost),
            fmt_real(r.opt_error_bound),
            fmt_real(r.ratio),
            fmt_real(r.ratio_lo),
            fmt_real(r.theorem_bound),
            r.checks_passed,
        );
    }
    out
}

/// Writes rows to `path` as CSV.
pub fn emit_csv(rows: &[SweepRow], path: &Path) -> Result<()> {
    std::fs::write(path, render_csv(rows)).map_err(|e| Error::io(path, e))
}

fn field<'a>(parts: &[&'a str], idx: usize, line_no: usize) -> Result<&'a str> {
    parts.get(idx).copied().ok_or_else(|| {
        Error::Parameter(format!(
            "CSV line {line_no}: expected {} fields, got {}",
            CSV_HEADER.split(',').count(),
            parts.len()
        ))
    })
}

fn parse_real(text: &str, line_no: usize, col: &str) -> Result<f64> {
    text.parse::<f64>().map_err(|_| {
        Error::Parameter(format!("CSV line {line_no}: bad real in column {col}: `{text}`"))
    })
}

/// Parses CSV text produced by [`render_csv`]. The header must match the
/// pinned column set exactly.
pub fn parse_csv_text(text: &str) -> Result<Vec<SweepRow>> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, header)) if header == CSV_HEADER => {}
        Some((_, header)) => {
            return Err(Error::Parameter(format!(
                "CSV header mismatch: expected `{CSV_HEADER}`, got `{header}`"
            )))
        }
        None => return Err(Error::Parameter("empty CSV input".into())),
    }
    let mut rows = Vec::new();
    for (i, line) in lines {
        if line.is_empty() {
            continue;
        }
        let line_no = i + 1;
        let parts: Vec<&str> = line.split(',').collect();
        let setting = Setting::parse(field(&parts, 0, line_no)?)?;
        let seed: u64 = field(&parts, 5, line_no)?.parse().map_err(|_| {
            Error::Parameter(format!("CSV line {line_no}: bad seed `{}`", parts[5]))
        })?;
        let t: usize = field(&parts, 6, line_no)?.parse().map_err(|_| {
            Error::Parameter(format!("CSV line {line_no}: bad T `{}`", parts[6]))
        })?;
        let checks_passed = match field(&parts, 13, line_no)? {
            "true" => true,
            "false" => false,
            other => {
                return Err(Error::Parameter(format!(
                    "CSV line {line_no}: bad checks_passed `{other}`"
                )))
            }
        };
        rows.push(SweepRow {
            setting,
            m: parse_real(field(&parts, 1, line_no)?, line_no, "M")?,
            l: parse_real(field(&parts, 2, line_no)?, line_no, "L")?,
            g: parse_real(field(&parts, 3, line_no)?, line_no, "G")?,
            alpha: parse_real(field(&parts, 4, line_no)?, line_no, "alpha")?,
            seed,
            t,
            total_cost: parse_real(field(&parts, 7, line_no)?, line_no, "total_cost")?,
            opt_cost: parse_real(field(&parts, 8, line_no)?, line_no, "opt_cost")?,
            opt_error_bound: parse_real(field(&parts, 9, line_no)?, line_no, "opt_error_bound")?,
            ratio: parse_real(field(&parts, 10, line_no)?, line_no, "ratio")?,
            ratio_lo: parse_real(field(&parts, 11, line_no)?, line_no, "ratio_lo")?,
            theorem_bound: parse_real(field(&parts, 12, line_no)?, line_no, "theorem_bound")?,
            checks_passed,
        });
    }
    Ok(rows)
}

/// Reads a CSV file written by [`emit_csv`].
pub fn parse_csv(path: &Path) -> Result<Vec<SweepRow>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_csv_text(&text)
}
