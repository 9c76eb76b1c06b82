//! Plain numeric CSV: comma separated, `\n` line endings, an optional first
//! line starting with `#`, dot decimal separator.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::types::Dataset;

/// Parses CSV text into a dataset. Lines and columns in errors are 1-based.
pub fn parse_matrix(text: &str) -> Result<Dataset> {
    let mut values = Vec::new();
    let mut dim: Option<usize> = None;
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.strip_suffix('\r').unwrap_or(raw);
        if idx == 0 && line.starts_with('#') {
            continue;
        }
        if line.trim().is_empty() {
            continue;
        }
        let mut count = 0;
        for (col, cell) in line.split(',').enumerate() {
            let v: f64 = cell.trim().parse().map_err(|_| Error::Parse {
                line: line_no,
                column: Some(col + 1),
                message: format!("`{}` is not a number", cell.trim()),
            })?;
            if !v.is_finite() {
                return Err(Error::Parse {
                    line: line_no,
                    column: Some(col + 1),
                    message: "non-finite value".into(),
                });
            }
            values.push(v);
            count += 1;
        }
        match dim {
            None => dim = Some(count),
            Some(d) if d != count => {
                return Err(Error::Parse {
                    line: line_no,
                    column: None,
                    message: format!("expected {d} cells, found {count}"),
                })
            }
            _ => {}
        }
    }
    let dim = dim.ok_or(Error::Parse {
        line: 0,
        column: None,
        message: "no data rows".into(),
    })?;
    Dataset::new(values, dim)
}

pub fn load_matrix(path: impl AsRef<Path>) -> Result<Dataset> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_matrix(&text)
}

/// Renders rows with shortest round-trip decimals, optionally behind a `#` header.
pub fn format_matrix<'a>(
    rows: impl IntoIterator<Item = &'a [f64]>,
    header: Option<&str>,
) -> String {
    let mut out = String::new();
    if let Some(h) = header {
        out.push_str("# ");
        out.push_str(h);
        out.push('\n');
    }
    for row in rows {
        for (i, v) in row.iter().enumerate() {
            if i > 0 {
                out.push(',');
            }
            let _ = write!(out, "{v:?}");
        }
        out.push('\n');
    }
    out
}

pub fn save_matrix(data: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    super::write_atomic(path.as_ref(), format_matrix(data.rows(), None).as_bytes())
}
