//! Per-command manifest listing the configuration and every produced file.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::codec::{file_sha256, write_atomic};
use crate::config::RunConfig;
use crate::error::{Error, Result};

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Artifact {
    /// Path relative to the manifest's directory.
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool_version: String,
    pub command: String,
    pub seed: u64,
    /// Hex SHA-256 of the dataset snapshot the command read or wrote.
    pub dataset_checksum: String,
    /// Embedding block sizes as `int/ext/oth`, when a model is involved.
    pub layout: Option<String>,
    pub artifacts: Vec<Artifact>,
    pub config: RunConfig,
}

impl RunManifest {
    pub fn new(command: &str, seed: u64, dataset_checksum: String, config: RunConfig) -> Self {
        Self {
            tool_version: TOOL_VERSION.to_string(),
            command: command.to_string(),
            seed,
            dataset_checksum,
            layout: None,
            artifacts: Vec::new(),
            config,
        }
    }

    /// File name of a command's manifest inside its output directory.
    pub fn file_name(command: &str) -> String {
        format!("{command}.manifest.toml")
    }

    /// Records `dir/name` with its current checksum.
    pub fn add(&mut self, dir: &Path, name: &str) -> Result<()> {
        let sha256 = file_sha256(&dir.join(name))?;
        self.artifacts.retain(|a| a.path != name);
        self.artifacts.push(Artifact {
            path: name.to_string(),
            sha256,
        });
        Ok(())
    }

    pub fn save(&self, dir: &Path) -> Result<PathBuf> {
        let path = dir.join(Self::file_name(&self.command));
        let text = toml::to_string(self).map_err(|e| Error::Config(format!("manifest: {e}")))?;
        write_atomic(&path, text.as_bytes())?;
        Ok(path)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        toml::from_str(&text).map_err(|e| Error::parse(path, 0, e.to_string()))
    }

    /// Re-reads every listed artifact and compares checksums.
    pub fn verify(&self, dir: &Path) -> Result<()> {
        for a in &self.artifacts {
            let path = dir.join(&a.path);
            let found = file_sha256(&path)?;
            if found != a.sha256 {
                return Err(Error::integrity(&path, format!("checksum {found} differs from manifest {}", a.sha256)));
            }
        }
        Ok(())
    }
}
