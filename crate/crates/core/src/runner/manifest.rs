//! Run manifests and canonical digests.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::Result;

/// SHA-256 of the canonical JSON form (object keys sorted), as hex.
pub fn digest_json<T: Serialize + ?Sized>(value: &T) -> String {
    let canonical = serde_json::to_value(value).expect("serializable value");
    hex::encode(Sha256::digest(canonical.to_string().as_bytes()))
}

pub fn digest_bytes(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn unix_seconds() -> f64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map_or(0.0, |d| d.as_secs_f64())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OutputFile {
    /// Relative to the output directory.
    pub path: PathBuf,
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub artifact_version: String,
    pub config_hash: Option<String>,
    pub master_seed: Option<u64>,
    pub n: Option<usize>,
    pub started_unix: f64,
    pub finished_unix: f64,
    pub exit_code: i32,
    pub status: String,
    pub error: Option<String>,
    /// Trials lost per failure kind.
    pub failures: BTreeMap<String, usize>,
    pub notes: Vec<String>,
    pub outputs: Vec<OutputFile>,
}

pub const MANIFEST_FILE: &str = "manifest.json";

impl RunManifest {
    pub fn start(command: &str) -> Self {
        Self {
            command: command.to_string(),
            artifact_version: env!("CARGO_PKG_VERSION").to_string(),
            config_hash: None,
            master_seed: None,
            n: None,
            started_unix: unix_seconds(),
            finished_unix: 0.0,
            exit_code: 0,
            status: "running".into(),
            error: None,
            failures: BTreeMap::new(),
            notes: Vec::new(),
            outputs: Vec::new(),
        }
    }

    /// Records a file already written under `dir`.
    pub fn record(&mut self, dir: &Path, relative: impl Into<PathBuf>) -> Result<()> {
        let relative = relative.into();
        let bytes = std::fs::read(dir.join(&relative))?;
        self.outputs.retain(|o| o.path != relative);
        self.outputs.push(OutputFile { path: relative, sha256: digest_bytes(&bytes), bytes: bytes.len() as u64 });
        Ok(())
    }

    pub fn finish(&mut self, exit_code: i32, error: Option<String>) {
        self.finished_unix = unix_seconds();
        self.exit_code = exit_code;
        self.status = match exit_code {
            0 => "ok",
            2 => "outside_bulk",
            64 => "usage",
            _ => "failed",
        }
        .into();
        self.error = error;
    }

    /// Writes `manifest.json` into `dir`, creating it if needed.
    pub fn write(&self, dir: &Path) -> Result<PathBuf> {
        std::fs::create_dir_all(dir)?;
        let path = dir.join(MANIFEST_FILE);
        std::fs::write(&path, serde_json::to_string_pretty(self)?)?;
        Ok(path)
    }

    pub fn read(dir: &Path) -> Result<Self> {
        Ok(serde_json::from_slice(&std::fs::read(dir.join(MANIFEST_FILE))?)?)
    }
}
