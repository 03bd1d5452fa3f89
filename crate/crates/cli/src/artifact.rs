//! Run artifacts: every command writes one JSON envelope.

use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

pub const ARTIFACT_SCHEMA: u32 = 1;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Artifact {
    pub schema_version: u32,
    pub command: String,
    pub family: String,
    pub input_hash: String,
    pub seed: Option<u64>,
    pub result: Value,
}

impl Artifact {
    pub fn new<T: Serialize>(command: &str, family: &str, input_hash: String, seed: Option<u64>, result: &T) -> Self {
        Self {
            schema_version: ARTIFACT_SCHEMA,
            command: command.to_string(),
            family: family.to_string(),
            input_hash,
            seed,
            result: serde_json::to_value(result).expect("results serialize"),
        }
    }
}

/// SHA-256 over the inputs, each length-prefixed so boundaries matter.
pub fn input_hash(parts: &[&[u8]]) -> String {
    let mut h = Sha256::new();
    for p in parts {
        h.update((p.len() as u64).to_le_bytes());
        h.update(p);
    }
    hex::encode(h.finalize())
}
