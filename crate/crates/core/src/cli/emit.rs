//! Deterministic CSV and JSON writers.

use std::borrow::Cow;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::config::RunConfig;
use crate::error::{io_error, Result};

/// A documented CSV column.
#[derive(Debug, Clone, Serialize)]
pub struct Column {
    pub name: Cow<'static, str>,
    pub unit: &'static str,
    pub description: &'static str,
}

pub const fn col(name: &'static str, unit: &'static str, description: &'static str) -> Column {
    Column {
        name: Cow::Borrowed(name),
        unit,
        description,
    }
}

/// 17 significant digits, `nan` for missing values.
pub fn num(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        "nan".to_owned()
    }
}

pub fn opt(x: Option<f64>) -> String {
    x.map_or_else(|| "nan".to_owned(), num)
}

/// CSV text with one `#` comment per column, then the header and rows.
pub fn csv(title: &str, columns: &[Column], rows: &[Vec<String>]) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# {title}");
    for c in columns {
        let _ = writeln!(out, "# {} [{}]: {}", c.name, c.unit, c.description);
    }
    let mut w = csv::Writer::from_writer(Vec::new());
    let header: Vec<&str> = columns.iter().map(|c| c.name.as_ref()).collect();
    // writing to memory cannot fail
    w.write_record(&header).expect("in-memory csv");
    for row in rows {
        w.write_record(row).expect("in-memory csv");
    }
    let body = w.into_inner().expect("in-memory csv");
    out.push_str(&String::from_utf8(body).expect("csv fields are utf-8"));
    out
}

/// JSON sidecar describing how a file was produced.
#[derive(Debug, Serialize)]
pub struct Metadata<'a, T: Serialize> {
    pub command: &'a str,
    pub package: &'a str,
    pub version: &'a str,
    pub seed: u64,
    pub config: &'a RunConfig,
    pub columns: &'a [Column],
    pub rows: usize,
    pub payload: T,
}

impl<'a, T: Serialize> Metadata<'a, T> {
    pub fn new(command: &'a str, config: &'a RunConfig, columns: &'a [Column], rows: usize, payload: T) -> Self {
        Self {
            command,
            package: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            seed: config.seed,
            config,
            columns,
            rows,
            payload,
        }
    }
}

pub fn json<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

/// Writes `contents` to `dir/name`, creating `dir` if needed.
pub fn write(dir: &Path, name: &str, contents: &str) -> Result<PathBuf> {
    std::fs::create_dir_all(dir).map_err(io_error(dir))?;
    let path = dir.join(name);
    std::fs::write(&path, contents).map_err(io_error(&path))?;
    Ok(path)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn number_format_round_trips() {
        for x in [0.1, 1.0 / 3.0, 1e-17, 12345.678, -2.5e300] {
            let s = num(x);
            assert_eq!(s.parse::<f64>().unwrap(), x, "{s}");
        }
        assert_eq!(num(f64::NAN), "nan");
        assert_eq!(num(0.5), "5.0000000000000000e-1");
    }

    #[test]
    fn csv_layout() {
        let cols = [col("k", "blocks", "index"), col("x", "1", "value")];
        let text = csv("demo", &cols, &[vec!["1".into(), num(0.5)]]);
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "# demo");
        assert_eq!(lines[1], "# k [blocks]: index");
        assert_eq!(lines[3], "k,x");
        assert_eq!(lines[4], "1,5.0000000000000000e-1");
    }
}
