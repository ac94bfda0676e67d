//! In-memory output set, written to disk in one go with a hashed manifest.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use flate2::write::GzEncoder;
use flate2::Compression;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use rydcoul::{Error, Result};

pub const SCHEMA_VERSION: &str = "1";
pub const MANIFEST: &str = "manifest.json";

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub file: String,
    pub bytes: u64,
    pub sha256: String,
    pub schema_version: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Manifest {
    pub schema_version: String,
    pub files: Vec<ManifestEntry>,
}

pub fn sha256_hex(data: &[u8]) -> String {
    Sha256::digest(data).iter().map(|b| format!("{b:02x}")).collect()
}

/// Files produced by one scenario, kept in insertion order.
#[derive(Default)]
pub struct OutputSet {
    files: Vec<(String, Vec<u8>)>,
}

impl OutputSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn names(&self) -> Vec<&str> {
        self.files.iter().map(|(n, _)| n.as_str()).collect()
    }

    pub fn get(&self, name: &str) -> Option<&[u8]> {
        self.files.iter().find(|(n, _)| n == name).map(|(_, b)| b.as_slice())
    }

    pub fn add_bytes(&mut self, name: impl Into<String>, data: Vec<u8>) {
        self.files.push((name.into(), data));
    }

    /// CSV with a header row; floats are written in shortest round-trip form.
    pub fn add_csv<R: AsRef<[String]>>(&mut self, name: &str, header: &[&str], rows: &[R]) -> Result<()> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(header).map_err(csv_err)?;
        for r in rows {
            w.write_record(r.as_ref()).map_err(csv_err)?;
        }
        let data = w.into_inner().map_err(|e| Error::Io(e.to_string()))?;
        self.add_bytes(name, data);
        Ok(())
    }

    pub fn add_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let mut data = serde_json::to_vec_pretty(value).map_err(|e| Error::Io(e.to_string()))?;
        data.push(b'\n');
        self.add_bytes(name, data);
        Ok(())
    }

    pub fn add_json_gz<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let raw = serde_json::to_vec(value).map_err(|e| Error::Io(e.to_string()))?;
        // No timestamp or file name in the header, so the bytes are reproducible.
        let mut enc = GzEncoder::new(Vec::new(), Compression::default());
        enc.write_all(&raw)?;
        self.add_bytes(name, enc.finish()?);
        Ok(())
    }

    pub fn manifest(&self) -> Manifest {
        Manifest {
            schema_version: SCHEMA_VERSION.into(),
            files: self
                .files
                .iter()
                .map(|(n, b)| ManifestEntry {
                    file: n.clone(),
                    bytes: b.len() as u64,
                    sha256: sha256_hex(b),
                    schema_version: SCHEMA_VERSION.into(),
                })
                .collect(),
        }
    }

    /// Writes every file and then the manifest; returns the manifest path.
    pub fn commit(&self, dir: &Path) -> Result<PathBuf> {
        fs::create_dir_all(dir)?;
        for (name, data) in &self.files {
            fs::write(dir.join(name), data)?;
        }
        let mut m = serde_json::to_vec_pretty(&self.manifest()).map_err(|e| Error::Io(e.to_string()))?;
        m.push(b'\n');
        let path = dir.join(MANIFEST);
        fs::write(&path, m)?;
        Ok(path)
    }
}

fn csv_err(e: csv::Error) -> Error {
    Error::Io(e.to_string())
}

/// Re-hashes every file listed in a manifest; returns the names that do not match.
pub fn verify_manifest(dir: &Path) -> Result<Vec<String>> {
    let text = fs::read_to_string(dir.join(MANIFEST))?;
    let m: Manifest = serde_json::from_str(&text).map_err(|e| Error::Io(e.to_string()))?;
    let mut bad = Vec::new();
    for e in m.files {
        match fs::read(dir.join(&e.file)) {
            Ok(data) if data.len() as u64 == e.bytes && sha256_hex(&data) == e.sha256 => {}
            _ => bad.push(e.file),
        }
    }
    Ok(bad)
}

/// Shortest representation that parses back to the same f64.
pub fn num(v: f64) -> String {
    format!("{v:?}")
}
