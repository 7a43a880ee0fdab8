//! Rendering of command payloads and atomic file output.
//!
//! Every command builds one JSON value. CSV and tables are views of that
//! value, never recomputed.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use clap::ValueEnum;
use serde_json::Value;

/// Relative `-o` paths are resolved against this directory when set.
pub const OUTPUT_DIR_ENV: &str = "CBINFLUENCE_OUTPUT_DIR";

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
    Table,
}

pub struct Report {
    pub value: Value,
    /// Key of an array of flat objects, used as CSV rows and the table body.
    pub rows: Option<&'static str>,
    /// Replaces the table rendering with a single field, e.g. a bare count.
    pub headline: Option<&'static str>,
}

impl Report {
    pub fn new(value: Value) -> Self {
        Report {
            value,
            rows: None,
            headline: None,
        }
    }

    pub fn with_rows(mut self, key: &'static str) -> Self {
        self.rows = Some(key);
        self
    }

    pub fn with_headline(mut self, key: &'static str) -> Self {
        self.headline = Some(key);
        self
    }

    pub fn render(&self, format: Format) -> Result<String> {
        match format {
            Format::Json => Ok(serde_json::to_string_pretty(&self.value)? + "\n"),
            Format::Csv => self.render_csv(),
            Format::Table => Ok(self.render_table()),
        }
    }

    fn row_values(&self) -> Option<&Vec<Value>> {
        self.rows.and_then(|k| self.value.get(k)).and_then(Value::as_array)
    }

    fn render_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        match self.row_values() {
            Some(rows) => {
                let header = rows.first().map(flatten).unwrap_or_default();
                w.write_record(header.iter().map(|(k, _)| k))?;
                for row in rows {
                    w.write_record(flatten(row).iter().map(|(_, v)| v))?;
                }
            }
            None => {
                w.write_record(["key", "value"])?;
                for (k, v) in flatten(&self.value) {
                    w.write_record([k, v])?;
                }
            }
        }
        Ok(String::from_utf8(w.into_inner()?)?)
    }

    fn render_table(&self) -> String {
        let mut out = String::new();
        if let Some(v) = self.headline.and_then(|k| self.value.get(k)) {
            out.push_str(&scalar(v));
            out.push('\n');
            if let Some(rows) = self.row_values() {
                for row in rows {
                    out.push_str(&scalar(row));
                    out.push('\n');
                }
            }
            return out;
        }
        let summary: Vec<(String, String)> = match (&self.value, self.rows) {
            (Value::Object(map), Some(key)) => map
                .iter()
                .filter(|(k, _)| k.as_str() != key)
                .flat_map(|(k, v)| flatten_into(k, v))
                .collect(),
            _ => flatten(&self.value),
        };
        let width = summary.iter().map(|(k, _)| k.len()).max().unwrap_or(0);
        for (k, v) in &summary {
            out.push_str(&format!("{k:<width$}  {v}\n"));
        }
        if let Some(rows) = self.row_values() {
            let cells: Vec<Vec<(String, String)>> = rows.iter().map(flatten).collect();
            let Some(first) = cells.first() else {
                return out;
            };
            let header: Vec<&str> = first.iter().map(|(k, _)| k.as_str()).collect();
            let widths: Vec<usize> = (0..header.len())
                .map(|j| {
                    cells
                        .iter()
                        .filter_map(|r| r.get(j).map(|c| c.1.len()))
                        .chain([header[j].len()])
                        .max()
                        .unwrap_or(0)
                })
                .collect();
            if !summary.is_empty() {
                out.push('\n');
            }
            let line = |items: Vec<&str>| {
                let padded: Vec<String> = items.iter().zip(&widths).map(|(s, &w)| format!("{s:>w$}")).collect();
                padded.join("  ").trim_end().to_string() + "\n"
            };
            out.push_str(&line(header.clone()));
            for row in &cells {
                out.push_str(&line(row.iter().map(|c| c.1.as_str()).collect()));
            }
        }
        out
    }
}

fn scalar(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        Value::Null => String::new(),
        other => other.to_string(),
    }
}

/// Dotted keys for nested objects, `[k]` for array elements.
fn flatten(v: &Value) -> Vec<(String, String)> {
    match v {
        Value::Object(map) => map.iter().flat_map(|(k, v)| flatten_into(k, v)).collect(),
        other => vec![(String::new(), scalar(other))],
    }
}

fn flatten_into(prefix: &str, v: &Value) -> Vec<(String, String)> {
    match v {
        Value::Object(map) => map
            .iter()
            .flat_map(|(k, v)| flatten_into(&format!("{prefix}.{k}"), v))
            .collect(),
        Value::Array(items) if items.iter().all(|x| !x.is_object() && !x.is_array()) => {
            vec![(prefix.to_string(), items.iter().map(scalar).collect::<Vec<_>>().join(" "))]
        }
        Value::Array(items) => items
            .iter()
            .enumerate()
            .flat_map(|(k, v)| flatten_into(&format!("{prefix}[{k}]"), v))
            .collect(),
        other => vec![(prefix.to_string(), scalar(other))],
    }
}

pub fn resolve(path: &Path) -> PathBuf {
    match std::env::var_os(OUTPUT_DIR_ENV) {
        Some(dir) if path.is_relative() => Path::new(&dir).join(path),
        _ => path.to_path_buf(),
    }
}

/// Writes to a sibling temporary file and renames it into place, so a failed
/// run never leaves a partial file at `path`.
pub fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    };
    fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
    let name = path
        .file_name()
        .with_context(|| format!("{} is not a file path", path.display()))?;
    let tmp = dir.join(format!(".{}.tmp-{}", name.to_string_lossy(), std::process::id()));
    let result = (|| -> Result<()> {
        let mut file = fs::File::create(&tmp)?;
        file.write_all(contents.as_bytes())?;
        file.sync_all()?;
        fs::rename(&tmp, path)?;
        Ok(())
    })();
    if result.is_err() {
        let _ = fs::remove_file(&tmp);
    }
    result.with_context(|| format!("writing {}", path.display()))
}
