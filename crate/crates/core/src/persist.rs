//! Artifact writing (CSV, JSON, SVG) and SHA-256 manifests.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");
pub const MANIFEST: &str = "manifest.json";

/// A named output held in memory until persisted.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Artifact {
    /// Path relative to the output directory.
    pub name: String,
    pub bytes: Vec<u8>,
}

impl Artifact {
    pub fn new(name: impl Into<String>, bytes: Vec<u8>) -> Self {
        Self {
            name: name.into(),
            bytes,
        }
    }

    /// JSON wrapped with the tool version and config hash.
    pub fn json<T: Serialize>(name: impl Into<String>, config_hash: &str, data: &T) -> Self {
        #[derive(Serialize)]
        struct Wrapped<'a, T> {
            tool_version: &'a str,
            config_hash: &'a str,
            data: &'a T,
        }
        let mut bytes = serde_json::to_vec_pretty(&Wrapped {
            tool_version: TOOL_VERSION,
            config_hash,
            data,
        })
        .expect("artifact serializes");
        bytes.push(b'\n');
        Self::new(name, bytes)
    }

    pub fn digest(&self) -> String {
        hex::encode(Sha256::digest(&self.bytes))
    }
}

/// Fixed-column CSV with a header row. Numbers are written with 17
/// significant digits so that they round-trip exactly.
#[derive(Debug, Clone)]
pub struct Csv {
    text: String,
    columns: usize,
}

pub enum Cell<'a> {
    Num(f64),
    Text(&'a str),
}

impl Csv {
    pub fn new(header: &[&str]) -> Self {
        Self {
            text: header.join(",") + "\n",
            columns: header.len(),
        }
    }

    pub fn row(&mut self, values: &[f64]) {
        let cells: Vec<Cell> = values.iter().map(|v| Cell::Num(*v)).collect();
        self.mixed_row(&cells);
    }

    pub fn mixed_row(&mut self, cells: &[Cell]) {
        assert_eq!(cells.len(), self.columns, "CSV row width");
        let parts: Vec<String> = cells
            .iter()
            .map(|c| match c {
                Cell::Num(v) => format_number(*v),
                Cell::Text(s) => s.to_string(),
            })
            .collect();
        self.text.push_str(&parts.join(","));
        self.text.push('\n');
    }

    pub fn into_artifact(self, name: impl Into<String>) -> Artifact {
        Artifact::new(name, self.text.into_bytes())
    }
}

pub fn format_number(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else if v.is_nan() {
        "nan".into()
    } else if v > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunRecord {
    pub tool_version: String,
    pub config_hash: String,
    pub command: String,
    /// Seconds since the Unix epoch.
    pub started: u64,
    pub finished: u64,
    pub outputs: Vec<ManifestEntry>,
}

fn now() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0)
}

fn write_atomic(path: &Path, bytes: &[u8]) -> std::io::Result<()> {
    let tmp = path.with_extension("partial");
    fs::write(&tmp, bytes)?;
    fs::rename(&tmp, path).inspect_err(|_| {
        let _ = fs::remove_file(&tmp);
    })
}

/// Writes every artifact and then the manifest. On failure the files written
/// by this call are removed again.
pub fn persist_run(
    artifacts: &[Artifact],
    command: &str,
    config_hash: &str,
    started: Option<u64>,
    dir: &Path,
) -> Result<RunRecord> {
    let started = started.unwrap_or_else(now);
    fs::create_dir_all(dir).map_err(|e| Error::io(dir.display().to_string(), e))?;
    let mut written: Vec<PathBuf> = Vec::new();
    let cleanup = |written: &[PathBuf]| {
        for p in written {
            let _ = fs::remove_file(p);
        }
    };
    let mut outputs = Vec::with_capacity(artifacts.len());
    for a in artifacts {
        if a.name == MANIFEST || Path::new(&a.name).is_absolute() || a.name.contains("..") {
            cleanup(&written);
            return Err(Error::io(a.name.clone(), std::io::Error::other("invalid artifact name")));
        }
        let path = dir.join(&a.name);
        let res = path
            .parent()
            .map_or(Ok(()), fs::create_dir_all)
            .and_then(|_| write_atomic(&path, &a.bytes));
        if let Err(e) = res {
            cleanup(&written);
            return Err(Error::io(path.display().to_string(), e));
        }
        written.push(path);
        outputs.push(ManifestEntry {
            path: a.name.clone(),
            sha256: a.digest(),
            bytes: a.bytes.len() as u64,
        });
    }
    let record = RunRecord {
        tool_version: TOOL_VERSION.to_string(),
        config_hash: config_hash.to_string(),
        command: command.to_string(),
        started,
        finished: now(),
        outputs,
    };
    let mut bytes = serde_json::to_vec_pretty(&record).expect("manifest serializes");
    bytes.push(b'\n');
    let path = dir.join(MANIFEST);
    if let Err(e) = write_atomic(&path, &bytes) {
        cleanup(&written);
        return Err(Error::io(path.display().to_string(), e));
    }
    Ok(record)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct VerifyReport {
    pub checked: usize,
    /// Paths whose digest or size differs, or that are missing.
    pub mismatches: Vec<String>,
}

impl VerifyReport {
    pub fn ok(&self) -> bool {
        self.mismatches.is_empty()
    }
}

pub fn read_manifest(dir: &Path) -> Result<RunRecord> {
    let path = dir.join(MANIFEST);
    let text = fs::read_to_string(&path).map_err(|e| Error::io(path.display().to_string(), e))?;
    serde_json::from_str(&text).map_err(|e| Error::config(MANIFEST, e.to_string()))
}

/// Recomputes every digest listed in the manifest.
pub fn verify_manifest(dir: &Path) -> Result<VerifyReport> {
    let record = read_manifest(dir)?;
    let mismatches = record
        .outputs
        .iter()
        .filter(|entry| match fs::read(dir.join(&entry.path)) {
            Ok(bytes) => bytes.len() as u64 != entry.bytes || hex::encode(Sha256::digest(&bytes)) != entry.sha256,
            Err(_) => true,
        })
        .map(|entry| entry.path.clone())
        .collect();
    Ok(VerifyReport {
        checked: record.outputs.len(),
        mismatches,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn artifacts() -> Vec<Artifact> {
        let mut csv = Csv::new(&["x", "u"]);
        csv.row(&[0.1, 1.0 / 3.0]);
        vec![
            csv.into_artifact("data/values.csv"),
            Artifact::json("summary.json", "abc", &vec![1.5, 2.5]),
        ]
    }

    #[test]
    fn numbers_round_trip() {
        for v in [1.0 / 3.0, 1e-300, -2.5e17, 0.1 + 0.2] {
            assert_eq!(format_number(v).parse::<f64>().unwrap(), v);
        }
        assert_eq!(format_number(f64::INFINITY), "inf");
    }

    #[test]
    fn manifest_validates_and_detects_tampering() {
        let dir = tempfile::tempdir().unwrap();
        let rec = persist_run(&artifacts(), "test", "abc", None, dir.path()).unwrap();
        assert_eq!(rec.outputs.len(), 2);
        assert_eq!(read_manifest(dir.path()).unwrap(), rec);
        assert!(verify_manifest(dir.path()).unwrap().ok());
        fs::write(dir.path().join("summary.json"), b"{}").unwrap();
        let report = verify_manifest(dir.path()).unwrap();
        assert_eq!(report.mismatches, vec!["summary.json"]);
        fs::remove_file(dir.path().join("data/values.csv")).unwrap();
        assert_eq!(verify_manifest(dir.path()).unwrap().mismatches.len(), 2);
    }

    #[test]
    fn identical_outputs_give_identical_digests() {
        let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
        let ra = persist_run(&artifacts(), "test", "abc", None, a.path()).unwrap();
        let rb = persist_run(&artifacts(), "test", "abc", None, b.path()).unwrap();
        assert_eq!(ra.outputs, rb.outputs);
    }

    #[test]
    fn failed_write_cleans_up() {
        let dir = tempfile::tempdir().unwrap();
        let mut list = artifacts();
        list.push(Artifact::new("../escape.csv", vec![]));
        assert!(persist_run(&list, "test", "abc", None, dir.path()).is_err());
        assert!(!dir.path().join("summary.json").exists());
        assert!(!dir.path().join(MANIFEST).exists());
        let json: serde_json::Value = serde_json::from_slice(&artifacts()[1].bytes).unwrap();
        assert_eq!(json["tool_version"], TOOL_VERSION);
        assert_eq!(json["config_hash"], "abc");
    }
}
