use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::config::RunConfig;
use crate::error::{Error, Result};
use crate::report::to_sorted_json;

/// Everything needed to reproduce one command's outputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub version: String,
    pub config: RunConfig,
    pub seeds: Vec<u64>,
    /// sha256 of each input file, keyed by its path relative to the data or
    /// output directory it was read from.
    pub inputs: BTreeMap<String, String>,
    pub outputs: BTreeMap<String, String>,
    pub timestamp_unix: Option<u64>,
}

pub fn sha256_file(path: &Path) -> Result<String> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

/// Collects written artifacts and finishes with a manifest next to them.
pub struct ArtifactWriter {
    root: PathBuf,
    outputs: BTreeMap<String, String>,
}

impl ArtifactWriter {
    pub fn new(root: &Path) -> Result<Self> {
        fs::create_dir_all(root).map_err(|e| Error::io(root, e))?;
        Ok(ArtifactWriter {
            root: root.to_path_buf(),
            outputs: BTreeMap::new(),
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn json<T: Serialize>(&mut self, rel: &str, value: &T) -> Result<()> {
        self.text(rel, &to_sorted_json(value))
    }

    pub fn text(&mut self, rel: &str, text: &str) -> Result<()> {
        let path = self.root.join(rel);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
        }
        fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
        self.record(rel)
    }

    /// Hashes a file that was written by other means.
    pub fn record(&mut self, rel: &str) -> Result<()> {
        let hash = sha256_file(&self.root.join(rel))?;
        self.outputs.insert(rel.to_string(), hash);
        Ok(())
    }

    pub fn finish(
        self,
        command: &str,
        config: &RunConfig,
        seeds: &[u64],
        inputs: BTreeMap<String, String>,
        timestamps: bool,
    ) -> Result<RunManifest> {
        let manifest = RunManifest {
            command: command.to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            config: config.clone(),
            seeds: seeds.to_vec(),
            inputs,
            outputs: self.outputs,
            timestamp_unix: timestamps.then(|| {
                SystemTime::now()
                    .duration_since(UNIX_EPOCH)
                    .map_or(0, |d| d.as_secs())
            }),
        };
        let path = self.root.join("manifest.json");
        fs::write(&path, to_sorted_json(&manifest)).map_err(|e| Error::io(&path, e))?;
        Ok(manifest)
    }
}
