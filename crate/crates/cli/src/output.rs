//! Deterministic CSV/JSON emission.
//!
//! Every CSV has a header row; every command also writes a JSON document
//! with the resolved configuration, crate versions and the machine-readable
//! results. Floats print in shortest round-trip form, so reruns with the
//! same config and seed are byte-identical; wall-clock timing goes to
//! stderr only.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

pub struct OutputWriter {
    dir: PathBuf,
    command: String,
}

impl OutputWriter {
    pub fn new(dir: &Path, command: &str) -> std::io::Result<Self> {
        fs::create_dir_all(dir)?;
        Ok(Self {
            dir: dir.to_path_buf(),
            command: command.to_string(),
        })
    }

    pub fn csv_path(&self) -> PathBuf {
        self.dir.join(format!("{}.csv", self.command))
    }

    pub fn json_path(&self) -> PathBuf {
        self.dir.join(format!("{}.json", self.command))
    }

    /// Write rows under a header; every cell formats via Display.
    pub fn write_csv(&self, header: &[&str], rows: &[Vec<String>]) -> std::io::Result<PathBuf> {
        let mut out = String::new();
        out.push_str(&header.join(","));
        out.push('\n');
        for row in rows {
            out.push_str(&row.join(","));
            out.push('\n');
        }
        let path = self.csv_path();
        fs::write(&path, out)?;
        Ok(path)
    }

    pub fn write_json<T: Serialize>(&self, document: &T) -> std::io::Result<PathBuf> {
        let mut body = serde_json::to_string_pretty(document).expect("serializable document");
        body.push('\n');
        let path = self.json_path();
        fs::write(&path, body)?;
        Ok(path)
    }
}

/// Envelope for the JSON document: resolved config + versions + results.
#[derive(Serialize)]
pub struct Document<C: Serialize, R: Serialize> {
    pub command: String,
    pub config: C,
    pub versions: Versions,
    pub results: R,
}

#[derive(Serialize)]
pub struct Versions {
    pub cli: &'static str,
    pub core: &'static str,
}

impl Versions {
    pub fn current() -> Self {
        Self {
            cli: env!("CARGO_PKG_VERSION"),
            core: env!("CARGO_PKG_VERSION"),
        }
    }
}

pub fn fmt_f64(x: f64) -> String {
    let mut s = String::new();
    // Shortest round-trip formatting; stable across runs.
    write!(s, "{x}").unwrap();
    s
}
