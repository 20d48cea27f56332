use rand::Rng;
use serde::{Deserialize, Serialize};

use super::graph::Gradients;
use super::tensor::Tensor;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ParamId(pub usize);

/// Named trainable tensors.
#[derive(Debug, Clone, Default)]
pub struct ParamStore {
    names: Vec<String>,
    values: Vec<Tensor>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub name: String,
    pub offset: usize,
    pub shape: [usize; 2],
}

impl ParamStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, name: impl Into<String>, value: Tensor) -> ParamId {
        self.names.push(name.into());
        self.values.push(value);
        ParamId(self.values.len() - 1)
    }

    pub fn zeros(&mut self, name: impl Into<String>, rows: usize, cols: usize) -> ParamId {
        self.add(name, Tensor::zeros(rows, cols))
    }

    /// Glorot-uniform initialized weight.
    pub fn glorot(&mut self, name: impl Into<String>, rows: usize, cols: usize, rng: &mut impl Rng) -> ParamId {
        let a = (6.0 / (rows + cols).max(1) as f64).sqrt();
        self.add(name, Tensor::from_fn(rows, cols, |_, _| rng.gen_range(-a..a)))
    }

    pub fn get(&self, id: ParamId) -> &Tensor {
        &self.values[id.0]
    }

    pub fn get_mut(&mut self, id: ParamId) -> &mut Tensor {
        &mut self.values[id.0]
    }

    pub fn name(&self, id: ParamId) -> &str {
        &self.names[id.0]
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn ids(&self) -> impl Iterator<Item = ParamId> {
        (0..self.values.len()).map(ParamId)
    }

    pub fn num_scalars(&self) -> usize {
        self.values.iter().map(Tensor::len).sum()
    }

    pub fn manifest(&self) -> Vec<ManifestEntry> {
        let mut off = 0;
        self.names
            .iter()
            .zip(&self.values)
            .map(|(n, v)| {
                let e = ManifestEntry {
                    name: n.clone(),
                    offset: off,
                    shape: [v.rows(), v.cols()],
                };
                off += v.len();
                e
            })
            .collect()
    }

    pub fn to_f32(&self) -> Vec<f32> {
        self.values.iter().flat_map(|v| v.data().iter().map(|&x| x as f32)).collect()
    }

    /// Overwrite values from a flat blob laid out as [`Self::manifest`].
    pub fn load_f32(&mut self, manifest: &[ManifestEntry], blob: &[f32]) -> Result<()> {
        if manifest != self.manifest().as_slice() {
            return Err(Error::Invalid("checkpoint manifest does not match the model".into()));
        }
        if blob.len() != self.num_scalars() {
            return Err(Error::Shape(format!(
                "checkpoint has {} values, model needs {}",
                blob.len(),
                self.num_scalars()
            )));
        }
        let mut off = 0;
        for v in &mut self.values {
            let n = v.len();
            for (d, &s) in v.data_mut().iter_mut().zip(&blob[off..off + n]) {
                *d = s as f64;
            }
            off += n;
        }
        Ok(())
    }

    /// Round every value through `f32`.
    pub fn round_to_f32(&mut self) {
        for v in &mut self.values {
            v.data_mut().iter_mut().for_each(|x| *x = *x as f32 as f64);
        }
    }
}

/// Adam with decoupled weight decay.
#[derive(Debug, Clone)]
pub struct AdamW {
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub weight_decay: f64,
    m: Vec<Tensor>,
    v: Vec<Tensor>,
    t: u64,
}

impl AdamW {
    pub fn new(store: &ParamStore, weight_decay: f64) -> Self {
        let zeros = |p: &Tensor| Tensor::zeros(p.rows(), p.cols());
        AdamW {
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            weight_decay,
            m: store.values.iter().map(zeros).collect(),
            v: store.values.iter().map(zeros).collect(),
            t: 0,
        }
    }

    pub fn steps(&self) -> u64 {
        self.t
    }

    /// One update. `scale` multiplies every gradient first (e.g. for clipping).
    pub fn step(&mut self, store: &mut ParamStore, grads: &Gradients, lr: f64, scale: f64) {
        self.t += 1;
        let b1t = 1.0 - self.beta1.powi(self.t as i32);
        let b2t = 1.0 - self.beta2.powi(self.t as i32);
        for (id, g) in grads.params() {
            let p = &mut store.values[id.0];
            let m = &mut self.m[id.0];
            let v = &mut self.v[id.0];
            for (((x, mi), vi), &gi) in p
                .data_mut()
                .iter_mut()
                .zip(m.data_mut())
                .zip(v.data_mut())
                .zip(g.data())
            {
                let gi = gi * scale;
                *mi = self.beta1 * *mi + (1.0 - self.beta1) * gi;
                *vi = self.beta2 * *vi + (1.0 - self.beta2) * gi * gi;
                *x -= lr * self.weight_decay * *x;
                *x -= lr * (*mi / b1t) / ((*vi / b2t).sqrt() + self.eps);
            }
        }
    }
}
