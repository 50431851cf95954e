//! The run manifest: configuration hash, seed, artifact version, wall
//! timestamp, and an index of per-experiment outputs. Timestamps live only
//! here so that result files can be compared byte-for-byte across reruns.

use std::path::Path;

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    /// SHA-256 of the config file bytes.
    pub config_hash: String,
    pub seed: u64,
    pub artifact_version: String,
    pub timestamp_unix: u64,
    pub experiments: Vec<ExperimentStatus>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentStatus {
    pub name: String,
    /// `ok` or the error text of a failed experiment; failures do not
    /// discard the outputs of the ones that succeeded.
    pub status: String,
    pub outputs: Vec<String>,
}

pub fn hash_config(config_bytes: &[u8]) -> String {
    let digest = Sha256::digest(config_bytes);
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

impl RunManifest {
    pub fn write(&self, dir: &Path) -> Result<()> {
        let path = dir.join(MANIFEST_FILE);
        let body = serde_json::to_string_pretty(self)?;
        std::fs::write(&path, body).with_context(|| format!("writing {}", path.display()))
    }

    pub fn load(dir: &Path) -> Result<Self> {
        let path = dir.join(MANIFEST_FILE);
        let body = std::fs::read_to_string(&path)
            .with_context(|| format!("reading {}", path.display()))?;
        Ok(serde_json::from_str(&body)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_hash_is_stable() {
        assert_eq!(hash_config(b"abc"), hash_config(b"abc"));
        assert_ne!(hash_config(b"abc"), hash_config(b"abd"));
        assert_eq!(hash_config(b"abc").len(), 64);
    }
}
