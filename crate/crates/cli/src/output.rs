use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::CliError;

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Written last, into every output directory.
#[derive(Debug, Serialize)]
pub struct Manifest {
    pub command: String,
    pub version: String,
    pub config_hash: String,
    pub seed: u64,
    pub workers: usize,
    pub status: String,
    pub exit_code: i32,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub message: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub last_good_time: Option<f64>,
    /// SHA-256 of every file written, relative to the output directory.
    pub outputs: BTreeMap<String, String>,
}

/// Tracks files written under one output directory.
pub struct OutputDir {
    root: PathBuf,
    written: BTreeMap<String, String>,
}

impl OutputDir {
    pub fn create(root: &Path) -> Result<Self, CliError> {
        fs::create_dir_all(root)?;
        Ok(Self {
            root: root.to_path_buf(),
            written: BTreeMap::new(),
        })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    pub fn write(&mut self, name: &str, contents: &[u8]) -> Result<(), CliError> {
        fs::write(self.root.join(name), contents)?;
        self.written.insert(name.to_string(), sha256_hex(contents));
        Ok(())
    }

    pub fn write_json<S: Serialize>(&mut self, name: &str, value: &S) -> Result<(), CliError> {
        let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::Io(e.to_string()))?;
        text.push('\n');
        self.write(name, text.as_bytes())
    }

    /// Registers files produced elsewhere under `sub`.
    pub fn record_tree(&mut self, sub: &str) -> Result<(), CliError> {
        let mut names: Vec<_> = fs::read_dir(self.root.join(sub))?
            .filter_map(|e| e.ok().map(|e| e.file_name().to_string_lossy().into_owned()))
            .collect();
        names.sort();
        for n in names {
            let rel = format!("{sub}/{n}");
            let bytes = fs::read(self.root.join(&rel))?;
            self.written.insert(rel, sha256_hex(&bytes));
        }
        Ok(())
    }

    pub fn finish(mut self, mut manifest: Manifest) -> Result<(), CliError> {
        manifest.outputs = std::mem::take(&mut self.written);
        let mut text = serde_json::to_string_pretty(&manifest).map_err(|e| CliError::Io(e.to_string()))?;
        text.push('\n');
        fs::write(self.root.join("manifest.json"), text)?;
        Ok(())
    }
}

/// Comma-separated table; floats use the shortest round-trip form.
pub struct Csv {
    text: String,
}

impl Csv {
    pub fn new(header: &[&str]) -> Self {
        Self {
            text: format!("{}\n", header.join(",")),
        }
    }

    pub fn row(&mut self, cells: &[Cell]) {
        let line: Vec<String> = cells.iter().map(|c| c.to_string()).collect();
        let _ = writeln!(self.text, "{}", line.join(","));
    }

    pub fn into_bytes(self) -> Vec<u8> {
        self.text.into_bytes()
    }
}

pub enum Cell<'a> {
    F(f64),
    U(usize),
    S(&'a str),
}

impl std::fmt::Display for Cell<'_> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Cell::F(v) => write!(f, "{v:?}"),
            Cell::U(v) => write!(f, "{v}"),
            Cell::S(v) => write!(f, "{v}"),
        }
    }
}
