//! CSV and JSON artifacts with a metadata header.
//!
//! CSV files start with `# key: value` lines followed by a mandatory header
//! row. JSON files carry the same metadata under `"metadata"`. Floats are
//! written in Rust's shortest round-trip form, so identical inputs give
//! identical bytes.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{json, Value};
use sinhrobin_core::Error;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Metadata {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub config_hash: String,
    pub c_gamma: f64,
    pub theta0: f64,
    pub seed: u64,
}

impl Metadata {
    fn lines(&self) -> String {
        format!(
            "# tool: {}\n# version: {}\n# command: {}\n# config_hash: {}\n# c_gamma: {}\n# theta0: {}\n# seed: {}\n",
            self.tool, self.version, self.command, self.config_hash, self.c_gamma, self.theta0, self.seed
        )
    }
}

/// Formats a float for tables; non-finite values become `nan`, `inf`, `-inf`.
pub fn num(v: f64) -> String {
    if v.is_nan() {
        "nan".into()
    } else if v.is_infinite() {
        if v > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        }
    } else {
        format!("{v:?}")
    }
}

/// Renders a CSV document.
pub fn csv_document(meta: &Metadata, header: &[&str], rows: &[Vec<String>]) -> Result<String, Error> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    let io = |e: csv::Error| Error::Config(format!("csv encoding failed: {e}"));
    w.write_record(header).map_err(io)?;
    for r in rows {
        if r.len() != header.len() {
            return Err(Error::Integrity(format!("row has {} fields, header has {}", r.len(), header.len())));
        }
        w.write_record(r).map_err(io)?;
    }
    let body = w.into_inner().map_err(|e| Error::Config(format!("csv encoding failed: {e}")))?;
    let body = String::from_utf8(body).map_err(|e| Error::Integrity(e.to_string()))?;
    Ok(meta.lines() + &body)
}

/// Renders a JSON document with the metadata block first.
pub fn json_document(meta: &Metadata, data: Value) -> String {
    let doc = json!({ "metadata": meta, "data": data });
    serde_json::to_string_pretty(&doc).expect("json values serialize") + "\n"
}

/// Writes `contents` to `dir/name`, creating `dir` as needed.
pub fn write_artifact(dir: &Path, name: &str, contents: &str) -> Result<PathBuf, Error> {
    fs::create_dir_all(dir).map_err(|e| Error::Config(format!("cannot create {}: {e}", dir.display())))?;
    let path = dir.join(name);
    fs::write(&path, contents).map_err(|e| Error::Config(format!("cannot write {}: {e}", path.display())))?;
    Ok(path)
}

/// Splits a CSV artifact into metadata pairs and the table body.
pub fn parse_csv(text: &str) -> (Vec<(String, String)>, Vec<Vec<String>>) {
    let mut meta = Vec::new();
    let mut body = String::new();
    for line in text.lines() {
        if let Some(rest) = line.strip_prefix("# ") {
            if let Some((k, v)) = rest.split_once(": ") {
                meta.push((k.to_string(), v.to_string()));
            }
        } else {
            body.push_str(line);
            body.push('\n');
        }
    }
    let mut r = csv::ReaderBuilder::new().has_headers(false).from_reader(body.as_bytes());
    let rows = r.records().filter_map(|x| x.ok()).map(|rec| rec.iter().map(String::from).collect()).collect();
    (meta, rows)
}
