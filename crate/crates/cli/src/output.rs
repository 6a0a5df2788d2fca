//! Buffered run outputs and the run manifest.
//!
//! Commands only add files to an [`Outputs`] buffer. Nothing touches the
//! output directory until the command has finished, so a failing run leaves
//! no partial results behind.

use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use fme_core::surface::io::{fmt_sig12, write_surface_csv, GridSidecar};
use fme_core::surface::Surface;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::{CliError, CliResult};

#[derive(Debug, Default)]
pub struct Outputs {
    files: Vec<(String, Vec<u8>)>,
}

impl Outputs {
    pub fn add(&mut self, name: impl Into<String>, bytes: Vec<u8>) {
        self.files.push((name.into(), bytes));
    }

    pub fn add_json<S: Serialize>(&mut self, name: &str, value: &S) -> CliResult<()> {
        let mut bytes = serde_json::to_vec_pretty(value)?;
        bytes.push(b'\n');
        self.add(name, bytes);
        Ok(())
    }

    pub fn add_csv(&mut self, name: &str, table: Table) -> CliResult<()> {
        let bytes = table
            .writer
            .into_inner()
            .map_err(|e| CliError::Io(e.to_string()))?;
        self.add(name, bytes);
        Ok(())
    }

    /// `<stem>.csv` plus its grid sidecar `<stem>.json`.
    pub fn add_surface(&mut self, stem: &str, f: &Surface<f64>) -> CliResult<()> {
        let mut bytes = Vec::new();
        write_surface_csv(f, &mut bytes)?;
        self.add(format!("{stem}.csv"), bytes);
        self.add_json(&format!("{stem}.json"), &GridSidecar::of(f))
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.files.iter().map(|(n, _)| n.as_str())
    }

    /// Writes every file (via a temporary name and a rename), then the
    /// manifest.
    pub fn commit(self, dir: &Path, mut manifest: RunManifest) -> CliResult<()> {
        let io = |e: std::io::Error| CliError::Io(format!("{}: {e}", dir.display()));
        std::fs::create_dir_all(dir).map_err(io)?;
        for (name, bytes) in &self.files {
            let tmp = dir.join(format!(".{name}.partial"));
            std::fs::write(&tmp, bytes).map_err(io)?;
            std::fs::rename(&tmp, dir.join(name)).map_err(io)?;
            manifest.outputs.push(OutputEntry {
                file: name.clone(),
                bytes: bytes.len(),
                sha256: sha256_hex(bytes),
            });
        }
        manifest.finished_unix_ms = unix_ms();
        let mut bytes = serde_json::to_vec_pretty(&manifest)?;
        bytes.push(b'\n');
        std::fs::write(dir.join("manifest.json"), bytes).map_err(io)
    }
}

/// CSV built in memory with 12-significant-digit numbers.
pub struct Table {
    writer: csv::Writer<Vec<u8>>,
}

pub enum Cell {
    Num(f64),
    Int(i64),
    Text(String),
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Num(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::Num(v) if v.is_nan() => "nan".into(),
            Cell::Num(v) if v.is_infinite() => if *v > 0.0 { "inf" } else { "-inf" }.into(),
            Cell::Num(v) => fmt_sig12(*v),
            Cell::Int(v) => v.to_string(),
            Cell::Text(s) => s.clone(),
        }
    }
}

impl Table {
    pub fn new(header: &[&str]) -> CliResult<Self> {
        let mut writer = csv::Writer::from_writer(Vec::new());
        writer.write_record(header).map_err(csv_err)?;
        Ok(Self { writer })
    }

    pub fn row(&mut self, cells: Vec<Cell>) -> CliResult<()> {
        self.writer
            .write_record(cells.iter().map(Cell::render))
            .map_err(csv_err)
    }
}

fn csv_err(e: csv::Error) -> CliError {
    CliError::Io(e.to_string())
}

#[derive(Debug, Clone, Serialize)]
pub struct OutputEntry {
    pub file: String,
    pub bytes: usize,
    pub sha256: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub subcommand: String,
    pub config_file: String,
    /// SHA-256 of the config file bytes as read.
    pub config_sha256: String,
    pub seed: u64,
    pub n_paths: usize,
    pub threads: Option<usize>,
    pub status: &'static str,
    pub started_unix_ms: u128,
    pub finished_unix_ms: u128,
    pub outputs: Vec<OutputEntry>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn unix_ms() -> u128 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_millis())
        .unwrap_or(0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_cells() {
        let mut t = Table::new(&["a", "b", "c", "d"]).unwrap();
        t.row(vec![
            0.25.into(),
            f64::NAN.into(),
            3usize.into(),
            "x".into(),
        ])
        .unwrap();
        t.row(vec![
            f64::NEG_INFINITY.into(),
            (-0.0).into(),
            0usize.into(),
            "".into(),
        ])
        .unwrap();
        let mut out = Outputs::default();
        out.add_csv("t.csv", t).unwrap();
        let text = String::from_utf8(out.files[0].1.clone()).unwrap();
        assert_eq!(
            text,
            "a,b,c,d\n2.50000000000e-1,nan,3,x\n-inf,0.00000000000e0,0,\n"
        );
    }

    #[test]
    fn commit_writes_manifest_last() {
        let dir = tempfile::tempdir().unwrap();
        let mut out = Outputs::default();
        out.add("a.txt", b"abc".to_vec());
        let manifest = RunManifest {
            tool: "t",
            version: "0",
            subcommand: "s".into(),
            config_file: "c".into(),
            config_sha256: String::new(),
            seed: 1,
            n_paths: 1,
            threads: None,
            status: "ok",
            started_unix_ms: 0,
            finished_unix_ms: 0,
            outputs: vec![],
        };
        out.commit(dir.path(), manifest).unwrap();
        let m: serde_json::Value =
            serde_json::from_slice(&std::fs::read(dir.path().join("manifest.json")).unwrap())
                .unwrap();
        assert_eq!(
            m["outputs"][0]["sha256"],
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
        let names: Vec<_> = std::fs::read_dir(dir.path())
            .unwrap()
            .map(|e| e.unwrap().file_name())
            .collect();
        assert_eq!(names.len(), 2);
    }
}
