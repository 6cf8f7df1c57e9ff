//! CSV/JSON writers and the run manifest.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{json, Value};

use crate::config::Sections;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

/// 17 significant digits.
pub fn fmt_f64(x: f64) -> String {
    if x.is_nan() {
        "NaN".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{x:.16e}")
    }
}

pub fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt_f64).unwrap_or_default()
}

pub struct Table {
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: Vec<&'static str>) -> Self {
        Self { header, rows: Vec::new() }
    }

    pub fn to_csv(&self) -> std::io::Result<Vec<u8>> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.header)?;
        for r in &self.rows {
            w.write_record(r)?;
        }
        w.into_inner().map_err(|e| e.into_error())
    }
}

pub fn to_json(mut body: Value) -> Vec<u8> {
    if let Value::Object(m) = &mut body {
        m.insert("schema_version".into(), json!(SCHEMA_VERSION));
    }
    let mut s = serde_json::to_vec_pretty(&body).expect("json values serialize");
    s.push(b'\n');
    s
}

pub fn manifest_path(out: &Path) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".manifest.json");
    PathBuf::from(s)
}

pub struct RunInfo<'a> {
    pub command: &'a str,
    pub config_path: Option<&'a Path>,
    pub resolved: &'a Sections,
    pub format: Format,
    pub seed: u64,
    pub threads: usize,
}

/// Write the output then its manifest next to it.
pub fn write_outputs(out: &Path, data: &[u8], info: &RunInfo) -> std::io::Result<()> {
    if let Some(dir) = out.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    fs::write(out, data)?;
    let manifest = json!({
        "command": info.command,
        "config_path": info.config_path.map(|p| p.display().to_string()),
        "config": info.resolved,
        "format": info.format,
        "seed": info.seed,
        "threads": info.threads,
        "output": out.display().to_string(),
        "version": env!("CARGO_PKG_VERSION"),
    });
    fs::write(manifest_path(out), to_json(manifest))
}
