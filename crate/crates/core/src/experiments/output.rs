//! CSV formatting, checksummed output files and the run manifest.

use crate::error::Result;
use crate::grid::Field2D;
use crate::run::StepRecord;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

/// Fixed 17-significant-digit scientific notation.
pub fn num(v: f64) -> String {
    format!("{v:.16e}")
}

/// Compact tag for file names, e.g. `1e-2`.
pub fn eps_tag(eps: f64) -> String {
    format!("{eps:e}")
}

/// Builds a CSV document with a single header line.
#[derive(Debug, Clone)]
pub struct Csv {
    text: String,
}

impl Csv {
    pub fn new(header: &[&str]) -> Self {
        let mut text = header.join(",");
        text.push('\n');
        Self { text }
    }

    pub fn row(&mut self, cells: &[String]) {
        self.text.push_str(&cells.join(","));
        self.text.push('\n');
    }

    pub fn into_bytes(self) -> Vec<u8> {
        self.text.into_bytes()
    }
}

/// `x,y,value` over the full node set.
pub fn field_csv(f: &Field2D) -> Vec<u8> {
    let mut c = Csv::new(&["x", "y", "value"]);
    for (x, y, v) in f.full_nodes() {
        c.row(&[num(x), num(y), num(v)]);
    }
    c.into_bytes()
}

pub const DIAGNOSTICS_HEADER: [&str; 7] = ["scheme", "eps", "step", "t", "mass", "residual", "iterations"];

pub fn diagnostics_rows(c: &mut Csv, scheme: &str, eps: f64, records: &[StepRecord]) {
    for r in records {
        c.row(&[
            scheme.to_string(),
            num(eps),
            r.step.to_string(),
            num(r.t),
            num(r.mass),
            num(r.residual),
            r.iterations.to_string(),
        ]);
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OutputEntry {
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Manifest {
    pub config: serde_json::Value,
    pub outputs: Vec<OutputEntry>,
    pub wall_time_s: f64,
    pub version: String,
    /// Fitted slopes, windows and other scalar results of analysis kinds.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub summary: Vec<(String, f64)>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    let mut s = String::with_capacity(64);
    for b in digest {
        write!(s, "{b:02x}").expect("writing to a String");
    }
    s
}

/// Writes files below one directory and records their checksums.
#[derive(Debug)]
pub struct OutputDir {
    root: PathBuf,
    entries: Vec<OutputEntry>,
}

impl OutputDir {
    pub fn create(root: &Path) -> Result<Self> {
        std::fs::create_dir_all(root)?;
        Ok(Self {
            root: root.to_path_buf(),
            entries: Vec::new(),
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn write(&mut self, rel: &str, bytes: &[u8]) -> Result<()> {
        std::fs::write(self.root.join(rel), bytes)?;
        self.entries.push(OutputEntry {
            path: rel.to_string(),
            sha256: sha256_hex(bytes),
        });
        Ok(())
    }

    pub fn files(&self) -> impl Iterator<Item = &str> {
        self.entries.iter().map(|e| e.path.as_str())
    }

    pub fn into_entries(self) -> Vec<OutputEntry> {
        self.entries
    }
}
