//! Run manifests: every invocation gets a hash over its effective
//! configuration (command, flags, input file contents) that all output files
//! reference, so artifacts can be traced back to the run that produced them.

use serde_json::{json, Value};
use sha2::{Digest, Sha256};

#[derive(Debug, Clone)]
pub struct RunManifest {
    pub command: String,
    pub inputs: Vec<String>,
    pub config_hash: String,
    pub seed: Option<u64>,
    pub version: String,
    pub timestamp: String,
}

impl RunManifest {
    /// Hash the command name, the resolved flag list, and the contents of
    /// every input file.
    pub fn new(
        command: &str,
        flags: &[(String, String)],
        inputs: &[(String, &str)],
        seed: Option<u64>,
    ) -> RunManifest {
        let mut hasher = Sha256::new();
        hasher.update(command.as_bytes());
        let mut sorted: Vec<&(String, String)> = flags.iter().collect();
        sorted.sort();
        for (k, v) in sorted {
            hasher.update(b"\x1f");
            hasher.update(k.as_bytes());
            hasher.update(b"=");
            hasher.update(v.as_bytes());
        }
        for (path, content) in inputs {
            hasher.update(b"\x1e");
            hasher.update(path.as_bytes());
            hasher.update(b":");
            hasher.update(content.as_bytes());
        }
        let digest = hasher.finalize();
        let config_hash: String = digest.iter().map(|b| format!("{b:02x}")).collect();
        RunManifest {
            command: command.to_string(),
            inputs: inputs.iter().map(|(p, _)| p.clone()).collect(),
            config_hash,
            seed,
            version: env!("CARGO_PKG_VERSION").to_string(),
            timestamp: chrono::Utc::now().to_rfc3339(),
        }
    }

    pub fn to_value(&self) -> Value {
        json!({
            "command": self.command,
            "inputs": self.inputs,
            "config_hash": self.config_hash,
            "seed": self.seed,
            "version": self.version,
            "timestamp": self.timestamp,
        })
    }

    /// Short hash for CSV comments and stdout.
    pub fn short_hash(&self) -> &str {
        &self.config_hash[..16.min(self.config_hash.len())]
    }
}
