//! CSV and JSON emission. Numbers use the shortest round-trip representation so
//! identical runs produce identical bytes.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::{CliError, Result};

/// Shortest exact decimal, switching to exponent form outside `[1e-4, 1e7)`.
pub fn num(v: f64) -> String {
    if v.is_nan() {
        "nan".into()
    } else if v.is_infinite() {
        if v > 0.0 { "inf".into() } else { "-inf".into() }
    } else if v == 0.0 || (1e-4..1e7).contains(&v.abs()) {
        format!("{v}")
    } else {
        format!("{v:e}")
    }
}

pub struct Csv {
    comments: Vec<String>,
    columns: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Csv {
    pub fn new(columns: &[&str]) -> Self {
        Csv {
            comments: Vec::new(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn comment(mut self, line: impl Into<String>) -> Self {
        self.comments.push(line.into());
        self
    }

    pub fn push(&mut self, row: Vec<String>) {
        assert_eq!(row.len(), self.columns.len(), "row width");
        self.rows.push(row);
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        for c in &self.comments {
            let _ = writeln!(out, "# {c}");
        }
        let _ = writeln!(out, "# columns: {}", self.columns.join(", "));
        let _ = writeln!(out, "{}", self.columns.join(","));
        for r in &self.rows {
            let _ = writeln!(out, "{}", r.join(","));
        }
        out
    }

    pub fn write(&self, dir: &Path, name: &str) -> Result<PathBuf> {
        write_text(dir, name, &self.render())
    }
}

pub fn write_text(dir: &Path, name: &str, text: &str) -> Result<PathBuf> {
    std::fs::create_dir_all(dir).map_err(|source| CliError::Io {
        path: dir.into(),
        source,
    })?;
    let path = dir.join(name);
    std::fs::write(&path, text).map_err(|source| CliError::Io {
        path: path.clone(),
        source,
    })?;
    Ok(path)
}

pub fn write_json<T: Serialize>(dir: &Path, name: &str, value: &T) -> Result<PathBuf> {
    let mut text = serde_json::to_string_pretty(value).expect("serializable report");
    text.push('\n');
    write_text(dir, name, &text)
}

/// Common envelope of every JSON summary.
#[derive(Serialize)]
pub struct Report<'a, C: Serialize, R: Serialize> {
    pub command: &'a str,
    pub version: &'a str,
    pub master_seed: u64,
    pub config: &'a C,
    pub results: R,
}

impl<'a, C: Serialize, R: Serialize> Report<'a, C, R> {
    pub fn new(command: &'a str, master_seed: u64, config: &'a C, results: R) -> Self {
        Report {
            command,
            version: env!("CARGO_PKG_VERSION"),
            master_seed,
            config,
            results,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn number_format_round_trips() {
        for v in [0.0, 0.5, 1.0 / 3.0, 1e-9, 123456789.0, -2.5e-5, 0.99] {
            assert_eq!(num(v).parse::<f64>().unwrap(), v);
        }
        assert_eq!(num(0.5), "0.5");
        assert_eq!(num(1e-9), "1e-9");
        assert_eq!(num(f64::NAN), "nan");
    }

    #[test]
    fn csv_layout() {
        let mut c = Csv::new(&["a", "b"]).comment("note");
        c.push(vec![num(1.0), num(0.25)]);
        assert_eq!(c.render(), "# note\n# columns: a, b\na,b\n1,0.25\n");
    }
}
