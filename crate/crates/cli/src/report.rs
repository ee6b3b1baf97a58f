//! Report emission: versioned JSON, or CSV with a gnuplot companion.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde_json::{json, Value};

use crate::args::Format;
use crate::CliError;

pub const SCHEMA: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Table {
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> String {
        let mut s = self.header.join(",");
        s.push('\n');
        for r in &self.rows {
            s.push_str(&r.join(","));
            s.push('\n');
        }
        s
    }
}

#[derive(Debug, Clone)]
pub struct Report {
    pub command: String,
    pub config: Value,
    pub seed: u64,
    pub result: Value,
    pub table: Option<Table>,
    /// `(x, y)` columns for the gnuplot file written next to a CSV
    pub plot: Option<(usize, usize)>,
}

impl Report {
    pub fn to_json(&self) -> Value {
        json!({
            "schema": SCHEMA,
            "command": self.command,
            "config": self.config,
            "seed": self.seed,
            "result": self.result,
        })
    }

    fn is_empty(&self) -> bool {
        let empty_result = match &self.result {
            Value::Null => true,
            Value::Object(m) => m.is_empty(),
            Value::Array(a) => a.is_empty(),
            _ => false,
        };
        empty_result && self.table.as_ref().is_none_or(|t| t.rows.is_empty())
    }
}

fn write_file(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text).map_err(|e| CliError::Io {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

fn gnuplot(t: &Table, (x, y): (usize, usize)) -> String {
    let mut s = format!("# {} {}\n", t.header[x], t.header[y]);
    for r in &t.rows {
        s.push_str(&format!("{} {}\n", r[x], r[y]));
    }
    s
}

/// Write `report` to `out` (stdout when `None`) and return the files written.
/// CSV output needs a table; a `.dat` file with two whitespace-separated
/// columns is written beside a CSV file when the report names plot columns.
pub fn emit_report(report: &Report, format: Format, out: Option<&Path>) -> Result<Vec<PathBuf>, CliError> {
    if report.is_empty() {
        return Err(CliError::Numeric("empty results, nothing written".into()));
    }
    let text = match format {
        Format::Json => {
            let mut s = serde_json::to_string_pretty(&report.to_json()).expect("serializable report");
            s.push('\n');
            s
        }
        Format::Csv => match &report.table {
            Some(t) if !t.rows.is_empty() => t.to_csv(),
            _ => return Err(CliError::Config(format!("{} has no tabular output; use --format json", report.command))),
        },
    };
    let Some(path) = out else {
        let mut stdout = std::io::stdout().lock();
        stdout.write_all(text.as_bytes()).map_err(|e| CliError::Io {
            path: PathBuf::from("<stdout>"),
            message: e.to_string(),
        })?;
        return Ok(Vec::new());
    };
    write_file(path, &text)?;
    let mut written = vec![path.to_path_buf()];
    if format == Format::Csv {
        if let (Some(t), Some(cols)) = (&report.table, report.plot) {
            let dat = path.with_extension("dat");
            write_file(&dat, &gnuplot(t, cols))?;
            written.push(dat);
        }
    }
    Ok(written)
}
