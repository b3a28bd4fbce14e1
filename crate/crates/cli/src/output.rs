use std::io::Write;
use std::path::{Path, PathBuf};

use ici_core::extended::format_extended;
use ici_core::ici_engine::Constants;
use serde::Serialize;

use crate::error::CliError;

/// Common layout of every JSON report.
#[derive(Debug, Serialize)]
pub struct Envelope<C: Serialize, G: Serialize, R: Serialize> {
    pub command: &'static str,
    pub version: &'static str,
    /// The fully resolved run configuration.
    pub config: C,
    pub constants: Constants,
    pub grid: G,
    pub pass: bool,
    pub failures: Vec<String>,
    pub result: R,
}

/// Rows of a CSV report.
#[derive(Debug, Default)]
pub struct Table {
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&'static str]) -> Self {
        Table {
            header: header.to_vec(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn write_to(&self, out: impl Write) -> Result<(), CliError> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(&self.header)?;
        for r in &self.rows {
            w.write_record(r)?;
        }
        w.flush().map_err(|e| CliError::io("csv", e))
    }
}

/// Shortest round-trip form (`1e-7`, not `0.0000001`); `inf` for `+∞`.
pub fn num(v: f64) -> String {
    if v.is_finite() {
        serde_json::to_string(&v).expect("finite float")
    } else {
        format_extended(v)
    }
}


/// `a;b;c` for a point.
pub fn point(v: &[f64]) -> String {
    v.iter().map(|x| num(*x)).collect::<Vec<_>>().join(";")
}

fn sibling(out: &Path, ext: &str) -> PathBuf {
    out.with_extension(ext)
}

pub fn create(path: &Path) -> Result<std::fs::File, CliError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    std::fs::File::create(path).map_err(|e| CliError::io(path, e))
}

/// Writes `<out>.json` and, for each table, `<out><suffix>.csv`. Without
/// `out` the JSON goes to standard output.
pub fn emit(out: Option<&Path>, json: &impl Serialize, tables: &[(&str, &Table)]) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(json)?;
    text.push('\n');
    match out {
        None => {
            std::io::stdout()
                .write_all(text.as_bytes())
                .map_err(|e| CliError::io("stdout", e))?;
        }
        Some(out) => {
            let jp = sibling(out, "json");
            create(&jp)?
                .write_all(text.as_bytes())
                .map_err(|e| CliError::io(&jp, e))?;
            for (suffix, t) in tables {
                let stem = out.with_extension("");
                let cp = PathBuf::from(format!("{}{suffix}.csv", stem.display()));
                t.write_to(create(&cp)?)?;
            }
        }
    }
    Ok(())
}
