//! Run manifests and content checksums.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::Result;
use crate::score_table::read_file;

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn file_sha256(path: impl AsRef<Path>) -> Result<String> {
    Ok(sha256_hex(&read_file(path.as_ref())?))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InputChecksum {
    pub role: String,
    pub path: String,
    pub sha256: String,
}

/// What was run, on which inputs, with which settings.
///
/// Wall time and worker count vary between otherwise identical runs, so the
/// manifest lives in its own file; other outputs reference it through the
/// input checksum chain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub config: serde_json::Value,
    pub inputs: Vec<InputChecksum>,
    pub seed: Option<u64>,
    pub tool_version: String,
    pub wall_time_secs: f64,
    pub workers: usize,
}

impl RunManifest {
    pub fn new(command: impl Into<String>, config: serde_json::Value) -> Self {
        Self {
            command: command.into(),
            config,
            inputs: Vec::new(),
            seed: None,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            wall_time_secs: 0.0,
            workers: 1,
        }
    }

    pub fn add_input(&mut self, role: &str, path: &Path) -> Result<&InputChecksum> {
        self.inputs.push(InputChecksum {
            role: role.to_string(),
            path: path.display().to_string(),
            sha256: file_sha256(path)?,
        });
        Ok(self.inputs.last().expect("just pushed"))
    }

    /// `role=sha256` pairs joined with `;`, the form embedded in output
    /// headers.
    pub fn checksum_chain(&self) -> String {
        self.inputs
            .iter()
            .map(|i| format!("{}={}", i.role, i.sha256))
            .collect::<Vec<_>>()
            .join(";")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn known_digest() {
        assert_eq!(
            sha256_hex(b"abc"),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }
}
