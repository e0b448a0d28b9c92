//! Run directory layout.
//!
//! ```text
//! <run>/config.toml      resolved configuration
//! <run>/report.json      schema-versioned report
//! <run>/tables/*.csv     columnar tables
//! <run>/manifest.json    sha256 of every file above
//! <run>/metadata.json    wall-clock data, excluded from the manifest
//! ```
//!
//! Everything except `metadata.json` is a function of the configuration.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

pub const REPORT_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Serialize)]
struct ManifestEntry {
    path: String,
    bytes: u64,
    sha256: String,
}

#[derive(Debug, Serialize)]
struct Manifest {
    schema_version: u32,
    files: Vec<ManifestEntry>,
}

/// Collects files under a run directory and seals them with a manifest.
pub struct RunDir {
    root: PathBuf,
    written: Vec<PathBuf>,
}

impl RunDir {
    /// Creates `root`, clearing files a previous run left behind.
    pub fn create(root: impl Into<PathBuf>) -> io::Result<Self> {
        let root = root.into();
        if root.exists() {
            for name in ["config.toml", "report.json", "manifest.json", "metadata.json"] {
                let p = root.join(name);
                if p.exists() {
                    fs::remove_file(p)?;
                }
            }
            let tables = root.join("tables");
            if tables.exists() {
                fs::remove_dir_all(tables)?;
            }
        }
        fs::create_dir_all(&root)?;
        Ok(Self { root, written: Vec::new() })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn write(&mut self, rel: impl AsRef<Path>, bytes: &[u8]) -> io::Result<PathBuf> {
        let rel = rel.as_ref().to_path_buf();
        let path = self.root.join(&rel);
        if let Some(dir) = path.parent() {
            fs::create_dir_all(dir)?;
        }
        fs::write(&path, bytes)?;
        self.written.push(rel);
        Ok(path)
    }

    pub fn write_json<T: Serialize>(&mut self, rel: impl AsRef<Path>, value: &T) -> io::Result<PathBuf> {
        let mut text = serde_json::to_string_pretty(value).map_err(io::Error::other)?;
        text.push('\n');
        self.write(rel, text.as_bytes())
    }

    pub fn write_table(&mut self, stem: &str, csv: &str) -> io::Result<PathBuf> {
        self.write(Path::new("tables").join(format!("{stem}.csv")), csv.as_bytes())
    }

    /// Registers a file written by other code, relative to the root.
    pub fn record(&mut self, rel: impl Into<PathBuf>) {
        self.written.push(rel.into());
    }

    /// Hashes every recorded file into `manifest.json`, then writes the
    /// metadata sidecar outside it.
    pub fn seal<T: Serialize>(mut self, metadata: &T) -> io::Result<PathBuf> {
        let mut rels = std::mem::take(&mut self.written);
        rels.sort();
        rels.dedup();
        let files = rels
            .iter()
            .map(|rel| {
                let bytes = fs::read(self.root.join(rel))?;
                Ok(ManifestEntry {
                    path: rel.to_string_lossy().replace('\\', "/"),
                    bytes: bytes.len() as u64,
                    sha256: hex::encode(Sha256::digest(&bytes)),
                })
            })
            .collect::<io::Result<Vec<_>>>()?;
        self.write_json("manifest.json", &Manifest { schema_version: REPORT_SCHEMA_VERSION, files })?;
        self.write_json("metadata.json", metadata)?;
        Ok(self.root)
    }
}
