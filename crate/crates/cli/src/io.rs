//! Output files with a provenance header, and complex matrix CSV input.
//!
//! Matrices are stored one row per line as `re,im` column pairs. Lines starting
//! with `#` and blank lines are skipped.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{json, Value};
use xjx_core::{c64, ComplexMatrix};

use crate::config::Settings;
use crate::error::{CliError, Result};

pub const TOOL_VERSION: &str = concat!("xjx ", env!("CARGO_PKG_VERSION"));

/// Provenance carried by every output file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Meta {
    pub tool: &'static str,
    pub command: String,
    pub config_sha256: String,
    pub seed: u64,
}

impl Meta {
    pub fn of(settings: &Settings) -> Self {
        Self {
            tool: TOOL_VERSION,
            command: settings.command.clone(),
            config_sha256: settings.hash(),
            seed: settings.seed,
        }
    }
}

/// Shortest round-trip representation, so output is byte-stable.
pub fn fmt_f64(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{x}")
    }
}

fn ensure_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            ensure_dir(parent)?;
        }
    }
    std::fs::write(path, text).map_err(|e| CliError::io(path, e))
}

/// Writes a CSV file with a `#` header block and a column-name line.
pub fn write_csv(path: &Path, meta: &Meta, columns: &[&str], rows: &[Vec<String>]) -> Result<PathBuf> {
    let mut text = String::new();
    let _ = writeln!(text, "# tool: {}", meta.tool);
    let _ = writeln!(text, "# command: {}", meta.command);
    let _ = writeln!(text, "# config_sha256: {}", meta.config_sha256);
    let _ = writeln!(text, "# seed: {}", meta.seed);
    let _ = writeln!(text, "{}", columns.join(","));
    for row in rows {
        debug_assert_eq!(row.len(), columns.len());
        let _ = writeln!(text, "{}", row.join(","));
    }
    write_file(path, &text)?;
    Ok(path.to_path_buf())
}

/// Writes `{"meta": ..., <body fields>}` as pretty-printed JSON.
pub fn write_json(path: &Path, meta: &Meta, body: impl Serialize) -> Result<PathBuf> {
    let mut doc = json!({ "meta": meta });
    match serde_json::to_value(body).expect("report serializes") {
        Value::Object(fields) => {
            let obj = doc.as_object_mut().expect("object");
            for (k, v) in fields {
                obj.insert(k, v);
            }
        }
        other => {
            doc.as_object_mut().expect("object").insert("data".into(), other);
        }
    }
    let mut text = serde_json::to_string_pretty(&doc).expect("json");
    text.push('\n');
    write_file(path, &text)?;
    Ok(path.to_path_buf())
}

/// Reads an `N x n` complex matrix stored as `2n` comma-separated reals per row.
pub fn read_matrix_csv(path: &Path) -> Result<ComplexMatrix> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    parse_matrix_csv(&text, path)
}

pub fn parse_matrix_csv(text: &str, path: &Path) -> Result<ComplexMatrix> {
    let err = |line: usize, column: usize, detail: String| CliError::Parse {
        path: path.to_path_buf(),
        line,
        column,
        detail,
    };
    let mut rows: Vec<Vec<c64>> = Vec::new();
    let mut width: Option<usize> = None;
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        let mut values = Vec::with_capacity(fields.len());
        for (col, field) in fields.iter().enumerate() {
            let v: f64 = field
                .parse()
                .map_err(|_| err(line_no, col + 1, format!("not a number: {field:?}")))?;
            if !v.is_finite() {
                return Err(err(line_no, col + 1, format!("non-finite value {field:?}")));
            }
            values.push(v);
        }
        if values.len() % 2 != 0 {
            return Err(err(
                line_no,
                values.len(),
                format!("odd number of fields ({}); expected re,im pairs", values.len()),
            ));
        }
        let cols = values.len() / 2;
        match width {
            None => width = Some(cols),
            Some(w) if w != cols => {
                return Err(err(
                    line_no,
                    values.len().min(2 * w) + 1,
                    format!("row has {cols} complex entries, previous rows have {w}"),
                ));
            }
            _ => {}
        }
        rows.push(values.chunks(2).map(|p| c64::new(p[0], p[1])).collect());
    }
    let Some(cols) = width else {
        return Err(err(1, 1, "no data rows".into()));
    };
    Ok(ComplexMatrix::from_fn(rows.len(), cols, |i, j| rows[i][j]))
}

/// Inverse of [`read_matrix_csv`].
pub fn write_matrix_csv(path: &Path, m: &ComplexMatrix) -> Result<PathBuf> {
    let mut text = String::new();
    for i in 0..m.nrows() {
        let row: Vec<String> = (0..m.ncols())
            .flat_map(|j| [fmt_f64(m[(i, j)].re), fmt_f64(m[(i, j)].im)])
            .collect();
        let _ = writeln!(text, "{}", row.join(","));
    }
    write_file(path, &text)?;
    Ok(path.to_path_buf())
}
