use std::collections::BTreeMap;
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::{Context, Result};
use serde::Serialize;
use sha2::{Digest, Sha256};

pub const MANIFEST_FILE: &str = "manifest.json";

/// Provenance record written next to every command's outputs.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub subcommand: String,
    pub seed: Option<u64>,
    pub config_sha256: Option<String>,
    /// File name to sha256 of every input read.
    pub inputs: BTreeMap<String, String>,
    /// Settings that affect outputs, as given on the command line.
    pub settings: BTreeMap<String, String>,
    /// Seconds since the epoch; `SOURCE_DATE_EPOCH` overrides the clock
    /// for reproducible manifests.
    pub created_unix_s: u64,
}

impl RunManifest {
    pub fn new(subcommand: &str, seed: Option<u64>) -> Self {
        Self {
            tool: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            subcommand: subcommand.to_string(),
            seed,
            config_sha256: None,
            inputs: BTreeMap::new(),
            settings: BTreeMap::new(),
            created_unix_s: created_unix_s(),
        }
    }

    pub fn config(&mut self, path: &Path) -> Result<()> {
        self.config_sha256 = Some(sha256_file(path)?);
        Ok(())
    }

    pub fn input(&mut self, path: &Path) -> Result<()> {
        self.inputs
            .insert(path.display().to_string(), sha256_file(path)?);
        Ok(())
    }

    pub fn setting(&mut self, key: &str, value: impl ToString) {
        self.settings.insert(key.to_string(), value.to_string());
    }

    pub fn write(&self, out_dir: &Path) -> Result<()> {
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        crate::write_file(&out_dir.join(MANIFEST_FILE), text.as_bytes())
    }
}

fn created_unix_s() -> u64 {
    if let Some(t) = std::env::var("SOURCE_DATE_EPOCH")
        .ok()
        .and_then(|v| v.parse().ok())
    {
        return t;
    }
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

pub fn sha256_file(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path).with_context(|| format!("cannot read {}", path.display()))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}
