//! Checkpoint file: one JSON header line, then little-endian `f32` params.

use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::model::{ModelConfig, ModelContext, Surrogate};
use crate::autograd::ManifestEntry;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckpointHeader {
    pub config: ModelConfig,
    pub step: u64,
    pub best_mse: f64,
    /// Caller-defined metadata, e.g. input normalization.
    #[serde(default)]
    pub extra: serde_json::Value,
    pub manifest: Vec<ManifestEntry>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub header: CheckpointHeader,
    pub params: Vec<f32>,
}

impl Checkpoint {
    pub fn from_model(model: &Surrogate, step: u64, best_mse: f64, extra: serde_json::Value) -> Self {
        Checkpoint {
            header: CheckpointHeader {
                config: model.config.clone(),
                step,
                best_mse,
                extra,
                manifest: model.store.manifest(),
            },
            params: model.store.to_f32(),
        }
    }

    /// Rebuild the model and load the stored parameters.
    pub fn restore(&self, ctx: ModelContext<'_>) -> Result<Surrogate> {
        let mut m = Surrogate::new(self.header.config.clone(), ctx)?;
        m.store.load_f32(&self.header.manifest, &self.params)?;
        Ok(m)
    }

    pub fn write_to(&self, mut w: impl Write) -> Result<()> {
        let mut buf = serde_json::to_vec(&self.header)?;
        buf.push(b'\n');
        buf.reserve(self.params.len() * 4);
        for p in &self.params {
            buf.extend_from_slice(&p.to_le_bytes());
        }
        w.write_all(&buf).map_err(|e| Error::io("<checkpoint>", e))
    }

    pub fn read_from(r: impl Read) -> Result<Self> {
        let mut r = BufReader::new(r);
        let mut line = String::new();
        r.read_line(&mut line).map_err(|e| Error::io("<checkpoint>", e))?;
        let header: CheckpointHeader = serde_json::from_str(line.trim_end())?;
        let mut bytes = Vec::new();
        r.read_to_end(&mut bytes).map_err(|e| Error::io("<checkpoint>", e))?;
        if bytes.len() % 4 != 0 {
            return Err(Error::Invalid("checkpoint payload is not a whole number of f32".into()));
        }
        let params: Vec<f32> = bytes
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
            .collect();
        let expect: usize = header.manifest.iter().map(|e| e.shape[0] * e.shape[1]).sum();
        if params.len() != expect {
            return Err(Error::Shape(format!(
                "checkpoint has {} params, manifest lists {expect}",
                params.len()
            )));
        }
        Ok(Checkpoint { header, params })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut buf = Vec::new();
        self.write_to(&mut buf)?;
        std::fs::write(path, buf).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let f = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::read_from(f)
    }
}
