//! Helpers shared by the line-oriented text formats.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};

pub(crate) fn parse_err(path: &str, line: usize, msg: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_string(),
        line,
        msg: msg.into(),
    }
}

pub(crate) fn read_to_string(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

pub(crate) fn write_string(path: &Path, contents: &str) -> Result<()> {
    std::fs::write(path, contents).map_err(|e| Error::io(path, e))
}

/// Parses `MAGIC VERSION key=value …` and returns the key/value map.
pub(crate) fn parse_header(
    line: &str,
    magic: &str,
    version: &str,
    path: &str,
    line_no: usize,
) -> Result<HashMap<String, String>> {
    let mut tokens = line.split_whitespace();
    if tokens.next() != Some(magic) {
        return Err(parse_err(
            path,
            line_no,
            format!("expected '{magic}' header"),
        ));
    }
    match tokens.next() {
        Some(v) if v == version => {}
        Some(v) => {
            return Err(parse_err(
                path,
                line_no,
                format!("unsupported version '{v}', expected '{version}'"),
            ))
        }
        None => return Err(parse_err(path, line_no, "missing version")),
    }
    let mut fields = HashMap::new();
    for tok in tokens {
        let (k, v) = tok
            .split_once('=')
            .ok_or_else(|| parse_err(path, line_no, format!("expected key=value, got '{tok}'")))?;
        fields.insert(k.to_string(), v.to_string());
    }
    Ok(fields)
}

pub(crate) fn field<T: std::str::FromStr>(
    fields: &HashMap<String, String>,
    key: &str,
    path: &str,
    line_no: usize,
) -> Result<T> {
    let raw = fields
        .get(key)
        .ok_or_else(|| parse_err(path, line_no, format!("missing header field '{key}'")))?;
    raw.parse()
        .map_err(|_| parse_err(path, line_no, format!("bad value '{raw}' for '{key}'")))
}

pub(crate) fn parse_floats(line: &str, path: &str, line_no: usize) -> Result<Vec<f64>> {
    line.split_whitespace()
        .map(|tok| {
            let v: f64 = tok
                .parse()
                .map_err(|_| parse_err(path, line_no, format!("non-numeric token '{tok}'")))?;
            if v.is_finite() {
                Ok(v)
            } else {
                Err(parse_err(
                    path,
                    line_no,
                    format!("non-finite value '{tok}'"),
                ))
            }
        })
        .collect()
}

/// Space-separated shortest round-trip representation.
pub(crate) fn push_row<'a>(out: &mut String, values: impl IntoIterator<Item = &'a f64>) {
    let mut first = true;
    for v in values {
        if !first {
            out.push(' ');
        }
        first = false;
        write!(out, "{v:?}").expect("writing to a String cannot fail");
    }
    out.push('\n');
}

/// Non-empty lines with their 1-based numbers; `#` starts a comment line.
pub(crate) fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
}
