//! Run manifests: what was run, on what, producing what.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::hex;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool_version: String,
    pub command_line: Vec<String>,
    pub config_digest: String,
    /// path -> SHA-256 of the file contents
    pub input_digests: BTreeMap<String, String>,
    pub output_digests: BTreeMap<String, String>,
    pub seed: Option<u64>,
    pub started_unix_s: u64,
    pub finished_unix_s: u64,
}

pub fn now_unix() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0)
}

pub fn file_digest(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path).with_context(|| format!("io: reading {}", path.display()))?;
    Ok(hex(&Sha256::digest(bytes)))
}

pub struct ManifestBuilder {
    command_line: Vec<String>,
    config_digest: String,
    seed: Option<u64>,
    started: u64,
    inputs: Vec<PathBuf>,
    outputs: Vec<PathBuf>,
}

impl ManifestBuilder {
    pub fn new(command_line: Vec<String>, config_digest: String, seed: Option<u64>) -> Self {
        Self { command_line, config_digest, seed, started: now_unix(), inputs: Vec::new(), outputs: Vec::new() }
    }

    pub fn input(&mut self, p: impl Into<PathBuf>) {
        self.inputs.push(p.into());
    }

    pub fn output(&mut self, p: impl Into<PathBuf>) {
        self.outputs.push(p.into());
    }

    /// Hashes inputs and outputs and writes the manifest as JSON to `path`.
    pub fn write(self, path: &Path) -> Result<RunManifest> {
        let digests = |ps: &[PathBuf]| -> Result<BTreeMap<String, String>> {
            ps.iter().map(|p| Ok((p.display().to_string(), file_digest(p)?))).collect()
        };
        let m = RunManifest {
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            command_line: self.command_line,
            config_digest: self.config_digest,
            input_digests: digests(&self.inputs)?,
            output_digests: digests(&self.outputs)?,
            seed: self.seed,
            started_unix_s: self.started,
            finished_unix_s: now_unix(),
        };
        let mut json = serde_json::to_string_pretty(&m)?;
        json.push('\n');
        std::fs::write(path, json).with_context(|| format!("io: writing {}", path.display()))?;
        Ok(m)
    }
}
