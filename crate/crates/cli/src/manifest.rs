use std::fs;
use std::path::Path;

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::args::Command;
use crate::run::Artifact;

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Serialize, Deserialize)]
pub struct OutputRecord {
    pub file: String,
    pub sha256: String,
}

/// Everything needed to reproduce a run, plus checksums of what it wrote.
#[derive(Debug, Serialize, Deserialize)]
pub struct RunManifest {
    pub version: String,
    pub config: Command,
    pub duration_secs: f64,
    pub workers: usize,
    pub outputs: Vec<OutputRecord>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

impl RunManifest {
    pub fn new(config: &Command, artifacts: &[Artifact], duration_secs: f64, workers: usize) -> Self {
        Self {
            version: env!("CARGO_PKG_VERSION").to_string(),
            config: config.clone(),
            duration_secs,
            workers,
            outputs: artifacts
                .iter()
                .map(|a| OutputRecord {
                    file: a.name.clone(),
                    sha256: sha256_hex(&a.bytes),
                })
                .collect(),
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let m = serde_json::from_str(&text).map_err(|e| crate::run::ConfigError(format!("bad manifest: {e}")))?;
        Ok(m)
    }
}
