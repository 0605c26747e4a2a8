//! File formats: experimental datasets, fit reports, and the shared
//! `# key: value` header convention.
//!
//! All numbers are written with Rust's shortest round-trip `f64` display,
//! so save/load cycles preserve every significand bit.

use crate::error::{Result, SlekanError};
use crate::hybrid::{FitReport, ReportRow};
use crate::train::{Dataset, DeformationMode, FitMetrics};
use std::fmt::Write as _;
use std::path::Path;

fn io_err(path: &Path, source: std::io::Error) -> SlekanError {
    SlekanError::Io {
        path: path.display().to_string(),
        source,
    }
}

fn parse_err(path: &Path, line: usize, column: usize, message: impl Into<String>) -> SlekanError {
    SlekanError::Parse {
        path: path.display().to_string(),
        line,
        column,
        message: message.into(),
    }
}

/// Ordered `(line, key, value)` entries from a `#`-prefixed header.
type HeaderEntries = Vec<(usize, String, String)>;
/// Non-empty body lines with their 1-based line numbers.
type BodyLines<'a> = Vec<(usize, &'a str)>;

/// Splits a document into its `#`-prefixed header (as ordered key-value
/// pairs) and the remaining body lines (1-based line numbers attached).
fn split_header(text: &str) -> (HeaderEntries, BodyLines<'_>) {
    let mut header = Vec::new();
    let mut body = Vec::new();
    let mut in_header = true;
    for (idx, raw) in text.lines().enumerate() {
        let lineno = idx + 1;
        if in_header {
            if let Some(rest) = raw.strip_prefix('#') {
                let rest = rest.trim();
                if let Some((k, v)) = rest.split_once(':') {
                    header.push((lineno, k.trim().to_string(), v.trim().to_string()));
                }
                continue;
            }
            in_header = false;
        }
        if !raw.trim().is_empty() {
            body.push((lineno, raw));
        }
    }
    (header, body)
}

fn parse_f64(path: &Path, line: usize, column: usize, s: &str) -> Result<f64> {
    s.trim()
        .parse::<f64>()
        .map_err(|_| parse_err(path, line, column, format!("expected a number, got {s:?}")))
}

/// Loads a stretch-stress dataset.
///
/// Expected layout: a `# key: value` header block carrying at least
/// `mode`, then a `stretch,stress` column line, then CSV rows. Stretches
/// must be >= 1 and strictly increasing; stresses must be finite.
pub fn load_experimental(path: &Path) -> Result<Dataset> {
    let text = std::fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    let (header, body) = split_header(&text);

    let mut mode = None;
    for (lineno, key, value) in &header {
        if key == "mode" {
            mode =
                Some(DeformationMode::parse(value).ok_or_else(|| {
                    parse_err(path, *lineno, 1, format!("unknown mode {value:?}"))
                })?);
        }
    }
    let mode = mode.ok_or_else(|| parse_err(path, 1, 1, "missing `# mode:` header"))?;

    let mut rows = body.iter();
    match rows.next() {
        Some((_, line)) if line.trim() == "stretch,stress" => {}
        Some((lineno, line)) => {
            return Err(parse_err(
                path,
                *lineno,
                1,
                format!("expected column line `stretch,stress`, got {line:?}"),
            ))
        }
        None => return Err(parse_err(path, 1, 1, "file has no data rows")),
    }

    let mut stretches = Vec::new();
    let mut stresses = Vec::new();
    for (row_index, (lineno, line)) in rows.enumerate() {
        let (a, b) = line
            .split_once(',')
            .ok_or_else(|| parse_err(path, *lineno, 1, "expected two comma-separated values"))?;
        let stretch = parse_f64(path, *lineno, 1, a)?;
        let stress = parse_f64(path, *lineno, a.len() + 2, b)?;
        if !(1.0..).contains(&stretch) || !stretch.is_finite() {
            return Err(parse_err(
                path,
                *lineno,
                1,
                format!("row {}: stretch must be >= 1, got {stretch}", row_index + 1),
            ));
        }
        if let Some(prev) = stretches.last() {
            if stretch <= *prev {
                return Err(parse_err(
                    path,
                    *lineno,
                    1,
                    format!(
                        "row {}: stretches must be strictly increasing ({stretch} after {prev})",
                        row_index + 1
                    ),
                ));
            }
        }
        if !stress.is_finite() {
            return Err(parse_err(
                path,
                *lineno,
                a.len() + 2,
                format!("row {}: stress must be finite", row_index + 1),
            ));
        }
        stretches.push(stretch);
        stresses.push(stress);
    }
    Dataset::new(stretches, stresses, mode)
}

fn fmt_history(history: &[f64]) -> String {
    history
        .iter()
        .map(|v| v.to_string())
        .collect::<Vec<_>>()
        .join(",")
}

/// Serializes a fit report; `load_report` parses this exactly.
pub fn report_to_text(report: &FitReport) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# mode: {}", report.mode.as_str());
    let _ = writeln!(out, "# gamma: {}", report.gamma);
    let _ = writeln!(out, "# alpha: {}", report.alpha);
    let _ = writeln!(out, "# youngs_modulus: {}", report.youngs_modulus);
    let _ = writeln!(out, "# beta: {}", report.beta);
    for (tag, m) in [
        ("sle", &report.sle_metrics),
        ("hybrid", &report.hybrid_metrics),
    ] {
        let _ = writeln!(out, "# {tag}_mae: {}", m.mae);
        let _ = writeln!(out, "# {tag}_rmse: {}", m.rmse);
        let _ = writeln!(out, "# {tag}_r_squared: {}", m.r_squared);
    }
    let _ = writeln!(out, "# residual_ratio: {}", report.residual_ratio);
    let _ = writeln!(out, "# saturated_count: {}", report.saturated_count);
    let _ = writeln!(out, "# loss_history: {}", fmt_history(&report.loss_history));
    let _ = writeln!(out, "lambda,tau_exp,tau_sle,tau_kan,tau_pred,saturated");
    for r in &report.rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            r.lambda,
            r.tau_exp,
            r.tau_sle,
            r.tau_kan,
            r.tau_pred,
            if r.saturated { 1 } else { 0 }
        );
    }
    out
}

pub fn save_report(report: &FitReport, path: &Path) -> Result<()> {
    std::fs::write(path, report_to_text(report)).map_err(|e| io_err(path, e))
}

pub fn load_report(path: &Path) -> Result<FitReport> {
    let text = std::fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    let (header, body) = split_header(&text);

    let mut fields: std::collections::HashMap<&str, (usize, &str)> =
        std::collections::HashMap::new();
    for (lineno, key, value) in &header {
        fields.insert(key.as_str(), (*lineno, value.as_str()));
    }
    let take = |key: &str| -> Result<(usize, &str)> {
        fields
            .get(key)
            .copied()
            .ok_or_else(|| parse_err(path, 1, 1, format!("missing `# {key}:` header")))
    };
    let take_f64 = |key: &str| -> Result<f64> {
        let (lineno, value) = take(key)?;
        parse_f64(path, lineno, 1, value)
    };

    let (mode_line, mode_str) = take("mode")?;
    let mode = DeformationMode::parse(mode_str)
        .ok_or_else(|| parse_err(path, mode_line, 1, format!("unknown mode {mode_str:?}")))?;
    let metrics = |tag: &str| -> Result<FitMetrics> {
        Ok(FitMetrics {
            mae: take_f64(&format!("{tag}_mae"))?,
            rmse: take_f64(&format!("{tag}_rmse"))?,
            r_squared: take_f64(&format!("{tag}_r_squared"))?,
        })
    };
    let (hist_line, hist_str) = take("loss_history")?;
    let loss_history = if hist_str.is_empty() {
        Vec::new()
    } else {
        hist_str
            .split(',')
            .map(|s| parse_f64(path, hist_line, 1, s))
            .collect::<Result<Vec<_>>>()?
    };
    let (count_line, count_str) = take("saturated_count")?;
    let saturated_count = count_str.parse::<usize>().map_err(|_| {
        parse_err(
            path,
            count_line,
            1,
            format!("expected an integer, got {count_str:?}"),
        )
    })?;

    let mut rows_iter = body.iter();
    match rows_iter.next() {
        Some((_, line)) if line.trim() == "lambda,tau_exp,tau_sle,tau_kan,tau_pred,saturated" => {}
        other => {
            let lineno = other.map(|(l, _)| *l).unwrap_or(1);
            return Err(parse_err(path, lineno, 1, "missing report column line"));
        }
    }
    let mut rows = Vec::new();
    for (lineno, line) in rows_iter {
        let parts: Vec<&str> = line.split(',').collect();
        if parts.len() != 6 {
            return Err(parse_err(
                path,
                *lineno,
                1,
                format!("expected 6 columns, got {}", parts.len()),
            ));
        }
        let saturated = match parts[5].trim() {
            "0" => false,
            "1" => true,
            other => {
                return Err(parse_err(
                    path,
                    *lineno,
                    1,
                    format!("saturated flag must be 0 or 1, got {other:?}"),
                ))
            }
        };
        rows.push(ReportRow {
            lambda: parse_f64(path, *lineno, 1, parts[0])?,
            tau_exp: parse_f64(path, *lineno, 1, parts[1])?,
            tau_sle: parse_f64(path, *lineno, 1, parts[2])?,
            tau_kan: parse_f64(path, *lineno, 1, parts[3])?,
            tau_pred: parse_f64(path, *lineno, 1, parts[4])?,
            saturated,
        });
    }

    Ok(FitReport {
        mode,
        gamma: take_f64("gamma")?,
        alpha: take_f64("alpha")?,
        youngs_modulus: take_f64("youngs_modulus")?,
        beta: take_f64("beta")?,
        rows,
        sle_metrics: metrics("sle")?,
        hybrid_metrics: metrics("hybrid")?,
        residual_ratio: take_f64("residual_ratio")?,
        saturated_count,
        loss_history,
    })
}

/// Parses a `key: value` config document (optionally `#`-prefixed lines);
/// later duplicates override earlier ones. Unknown keys are the caller's
/// business: the full map is returned in file order.
pub fn parse_key_values(path: &Path, text: &str) -> Result<Vec<(usize, String, String)>> {
    let mut out = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let lineno = idx + 1;
        let line = raw.strip_prefix('#').unwrap_or(raw).trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line.split_once(':').ok_or_else(|| {
            parse_err(
                path,
                lineno,
                1,
                format!("expected `key: value`, got {raw:?}"),
            )
        })?;
        out.push((lineno, k.trim().to_string(), v.trim().to_string()));
    }
    Ok(out)
}
