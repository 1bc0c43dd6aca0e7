//! Versioned CSV and JSONL writers.
//!
//! Every JSONL line carries `schema_version`, the toolkit version, the
//! config hash and the record kind. CSV files start with `#` comment lines
//! holding the same provenance and a column description, then a header row.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::Result;

pub const SCHEMA_VERSION: u32 = 1;
pub const TOOLKIT_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Which files to emit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Csv,
    Jsonl,
    Both,
}

impl Format {
    fn csv(self) -> bool {
        matches!(self, Format::Csv | Format::Both)
    }

    fn jsonl(self) -> bool {
        matches!(self, Format::Jsonl | Format::Both)
    }
}

/// A record type with a flat CSV form.
pub trait Record: Serialize {
    const KIND: &'static str;
    /// Comma-separated column names.
    fn csv_header() -> String;
    /// One-line description of the columns for the CSV preamble.
    fn csv_doc() -> &'static str;
    fn csv_row(&self) -> String;
}

#[derive(Serialize)]
struct Envelope<'a, T: Serialize> {
    schema_version: u32,
    toolkit_version: &'static str,
    config_hash: &'a str,
    kind: &'static str,
    #[serde(flatten)]
    record: &'a T,
}

/// One JSONL line for `record`.
pub fn jsonl_line<T: Record>(record: &T, config_hash: &str) -> String {
    let env = Envelope {
        schema_version: SCHEMA_VERSION,
        toolkit_version: TOOLKIT_VERSION,
        config_hash,
        kind: T::KIND,
        record,
    };
    serde_json::to_string(&env).expect("records serialize")
}

/// Complete CSV text for `records`.
pub fn csv_text<T: Record>(records: &[T], config_hash: &str) -> String {
    let mut s = format!(
        "# schema_version={SCHEMA_VERSION}\n# toolkit=hopwalk {TOOLKIT_VERSION}\n# config_hash={config_hash}\n# kind={}\n# {}\n{}\n",
        T::KIND,
        T::csv_doc(),
        T::csv_header()
    );
    for r in records {
        s.push_str(&r.csv_row());
        s.push('\n');
    }
    s
}

/// Writes `<stem>.csv` and/or `<stem>.jsonl` into `dir`.
pub fn write_records<T: Record>(dir: &Path, stem: &str, records: &[T], config_hash: &str, format: Format) -> Result<Vec<PathBuf>> {
    let mut written = Vec::new();
    if format.csv() {
        let path = dir.join(format!("{stem}.csv"));
        std::fs::write(&path, csv_text(records, config_hash))?;
        written.push(path);
    }
    if format.jsonl() {
        let path = dir.join(format!("{stem}.jsonl"));
        let mut w = BufWriter::new(File::create(&path)?);
        for r in records {
            writeln!(w, "{}", jsonl_line(r, config_hash))?;
        }
        w.flush()?;
        written.push(path);
    }
    Ok(written)
}

/// Formats an optional number as a CSV cell.
pub(crate) fn cell(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}
