//! Run manifests: everything needed to re-run a command bit-identically.

use std::collections::BTreeMap;
use std::path::Path;

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub version: String,
    pub created_utc: String,
    /// Fully resolved configuration (TOML text).
    pub resolved_config: String,
    pub dataset_checksum: Option<String>,
    pub seed: Option<u64>,
    /// Per-stage wall-clock timings in milliseconds.
    pub timings_ms: BTreeMap<String, u64>,
    pub outputs: Vec<String>,
}

impl RunManifest {
    pub fn new(command: &str, resolved_config: String) -> Self {
        RunManifest {
            command: command.to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            created_utc: chrono::Utc::now().format("%Y-%m-%dT%H:%M:%SZ").to_string(),
            resolved_config,
            dataset_checksum: None,
            seed: None,
            timings_ms: BTreeMap::new(),
            outputs: Vec::new(),
        }
    }

    pub fn save(&self, dir: &Path) -> Result<()> {
        let path = dir.join("manifest.json");
        let text = serde_json::to_string_pretty(self)?;
        std::fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
        Ok(())
    }
}

/// `sha256:<hex>` of a file's contents.
pub fn file_checksum(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    let mut hasher = Sha256::new();
    hasher.update(&bytes);
    let digest = hasher.finalize();
    let mut hex = String::with_capacity(7 + digest.len() * 2);
    hex.push_str("sha256:");
    for b in digest.iter() {
        hex.push_str(&format!("{b:02x}"));
    }
    Ok(hex)
}

/// Machine-readable error record written next to the logs on failure.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ErrorRecord {
    pub command: String,
    pub error: String,
}

pub fn write_error_record(dir: &Path, command: &str, error: &str) {
    let record = ErrorRecord {
        command: command.to_string(),
        error: error.to_string(),
    };
    if let Ok(text) = serde_json::to_string_pretty(&record) {
        let _ = std::fs::create_dir_all(dir);
        let _ = std::fs::write(dir.join("error.json"), text);
    }
}
