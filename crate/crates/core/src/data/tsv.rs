//! Shared line handling for the tab-separated interchange files.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};

/// A data line with its 1-based line number. Comment and blank lines are skipped.
pub(crate) struct Record<'a> {
    pub line: usize,
    pub fields: Vec<&'a str>,
}

pub(crate) fn records(text: &str) -> impl Iterator<Item = Record<'_>> {
    text.lines().enumerate().filter_map(|(i, raw)| {
        let raw = raw.strip_suffix('\r').unwrap_or(raw);
        if raw.trim().is_empty() || raw.starts_with('#') {
            return None;
        }
        Some(Record {
            line: i + 1,
            fields: raw.split('\t').collect(),
        })
    })
}

pub(crate) fn read_file(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

pub(crate) fn write_file(path: &Path, contents: &str) -> Result<()> {
    std::fs::write(path, contents).map_err(|e| Error::io(path, e))
}

pub(crate) fn file_label(path: &Path) -> String {
    path.display().to_string()
}

/// 17 significant digits: enough for every f64 to survive a text round trip bit-exactly.
pub fn format_f64(x: f64) -> String {
    format!("{x:.16e}")
}

pub(crate) fn push_vector(out: &mut String, values: &[f64]) {
    for (i, v) in values.iter().enumerate() {
        if i > 0 {
            out.push(' ');
        }
        let _ = write!(out, "{}", format_f64(*v));
    }
}

pub(crate) fn parse_error(file: &str, line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        file: file.to_string(),
        line,
        message: message.into(),
    }
}

pub(crate) fn validation_error(
    file: &str,
    line: usize,
    field: &str,
    message: impl Into<String>,
) -> Error {
    Error::Validation {
        file: file.to_string(),
        line,
        field: field.to_string(),
        message: message.into(),
    }
}

pub(crate) fn expect_fields(file: &str, rec: &Record<'_>, n: usize, layout: &str) -> Result<()> {
    if rec.fields.len() != n {
        return Err(parse_error(
            file,
            rec.line,
            format!(
                "expected {n} tab-separated fields ({layout}), found {}",
                rec.fields.len()
            ),
        ));
    }
    Ok(())
}

pub(crate) fn nonempty<'a>(file: &str, line: usize, field: &str, value: &'a str) -> Result<&'a str> {
    let value = value.trim();
    if value.is_empty() {
        return Err(validation_error(file, line, field, "must be nonempty"));
    }
    Ok(value)
}

pub(crate) fn parse_float(file: &str, line: usize, field: &str, text: &str) -> Result<f64> {
    let v: f64 = text
        .trim()
        .parse()
        .map_err(|_| parse_error(file, line, format!("field `{field}`: `{text}` is not a number")))?;
    if !v.is_finite() {
        return Err(validation_error(file, line, field, "value must be finite"));
    }
    Ok(v)
}

/// Parses a declared dimension followed by a space-separated vector of exactly that length.
pub(crate) fn parse_sized_vector(
    file: &str,
    line: usize,
    dim_text: &str,
    values_text: &str,
) -> Result<Vec<f64>> {
    let dim: usize = dim_text
        .trim()
        .parse()
        .map_err(|_| parse_error(file, line, format!("field `d`: `{dim_text}` is not a positive integer")))?;
    if dim == 0 {
        return Err(validation_error(file, line, "d", "dimension must be positive"));
    }
    let values = values_text
        .split_whitespace()
        .enumerate()
        .map(|(i, tok)| parse_float(file, line, &format!("v{}", i + 1), tok))
        .collect::<Result<Vec<_>>>()?;
    if values.len() != dim {
        return Err(validation_error(
            file,
            line,
            "vector",
            format!("dimension mismatch: declared {dim}, found {} values", values.len()),
        ));
    }
    Ok(values)
}
