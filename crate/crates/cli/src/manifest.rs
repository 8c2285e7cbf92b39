//! Run manifest written next to the outputs.

use std::path::Path;

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::{CliError, CliResult};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub tool_version: String,
    pub config_path: String,
    /// SHA-256 of the config file bytes, lowercase hex.
    pub config_sha256: String,
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trials: Option<usize>,
    pub outputs: Vec<String>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

impl RunManifest {
    pub fn new(
        command: &str,
        config_path: &Path,
        config_bytes: &[u8],
        seed: u64,
        trials: Option<usize>,
        outputs: Vec<String>,
    ) -> Self {
        RunManifest {
            command: command.to_string(),
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            config_path: config_path.display().to_string(),
            config_sha256: sha256_hex(config_bytes),
            seed,
            trials,
            outputs,
        }
    }

    pub fn file_name(&self) -> String {
        format!("manifest_{}.toml", self.command)
    }

    pub fn write(&self, dir: &Path) -> CliResult<()> {
        let text = toml::to_string(self).map_err(|e| CliError::Usage(e.to_string()))?;
        let path = dir.join(self.file_name());
        std::fs::write(&path, text).map_err(|source| CliError::Io { path, source })
    }
}
