use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use qpjumps::io::write_atomic;
use qpjumps::Result;

/// Record of one command invocation, written after all of its outputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    /// SHA-256 of the effective configuration written as `config.txt`.
    pub config_hash: Option<String>,
    pub rng_seed: Option<u64>,
    pub inputs: Vec<String>,
    /// Paths relative to the output directory.
    pub outputs: Vec<String>,
    pub wall_clock_s: f64,
    pub counts: BTreeMap<String, u64>,
    pub warnings: Vec<String>,
}

pub const MANIFEST_NAME: &str = "manifest.json";

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

impl RunManifest {
    pub fn new(command: &str) -> Self {
        Self {
            tool: env!("CARGO_PKG_NAME").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            command: command.to_string(),
            config_hash: None,
            rng_seed: None,
            inputs: Vec::new(),
            outputs: Vec::new(),
            wall_clock_s: 0.0,
            counts: BTreeMap::new(),
            warnings: Vec::new(),
        }
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        let json = serde_json::to_string_pretty(self).expect("manifest serializes");
        write_atomic(&dir.join(MANIFEST_NAME), |w| {
            w.write_all(json.as_bytes())?;
            w.write_all(b"\n")
        })
    }
}
