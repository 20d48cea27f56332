use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

/// Provenance written as `run.json` next to every command's outputs.
#[derive(Debug, Serialize)]
pub struct RunRecord {
    pub command: String,
    pub version: &'static str,
    pub args: Vec<String>,
    pub config: Value,
    pub config_hash: String,
    pub seed: Option<u64>,
    pub threads: usize,
    pub started_unix: u64,
    pub elapsed_s: f64,
}

pub fn config_hash(config: &Value) -> String {
    hex::encode(Sha256::digest(config.to_string().as_bytes()))
}

impl RunRecord {
    pub fn new(command: &str, config: Value, seed: Option<u64>) -> Self {
        RunRecord {
            command: command.to_string(),
            version: env!("CARGO_PKG_VERSION"),
            args: std::env::args().collect(),
            config_hash: config_hash(&config),
            config,
            seed,
            threads: rayon::current_num_threads(),
            started_unix: 0,
            elapsed_s: 0.0,
        }
    }

    /// Stamp the timing and write `run.json` into `out`.
    pub fn finish(mut self, out: &Path, started: SystemTime) -> std::io::Result<()> {
        self.started_unix = started.duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs());
        self.elapsed_s = started.elapsed().map_or(0.0, |d| d.as_secs_f64());
        let text = serde_json::to_string_pretty(&self).map_err(std::io::Error::other)?;
        std::fs::write(out.join("run.json"), text)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hash_depends_only_on_config() {
        let a = serde_json::json!({"lr": 0.001, "epochs": 3});
        let b = serde_json::json!({"lr": 0.001, "epochs": 3});
        assert_eq!(config_hash(&a), config_hash(&b));
        assert_ne!(config_hash(&a), config_hash(&serde_json::json!({"lr": 0.002, "epochs": 3})));
        assert_eq!(config_hash(&a).len(), 64);
    }
}
