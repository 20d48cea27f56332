use serde::{Deserialize, Serialize};

use crate::autograd::Tensor;
use crate::error::{Error, Result};
use crate::surrogates::{CaseInputs, WssSeries};

const MIN_STD: f64 = 1e-8;

/// Column-wise standardization fitted on training rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnNorm {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl ColumnNorm {
    pub fn fit<'a>(rows: impl IntoIterator<Item = &'a Tensor>) -> Result<Self> {
        let mut n = 0.0;
        let mut s: Vec<f64> = Vec::new();
        let mut s2: Vec<f64> = Vec::new();
        for t in rows {
            if s.is_empty() {
                s = vec![0.0; t.cols()];
                s2 = vec![0.0; t.cols()];
            }
            if t.cols() != s.len() {
                return Err(Error::Shape(format!("{} columns, expected {}", t.cols(), s.len())));
            }
            for r in 0..t.rows() {
                for (c, &x) in t.row(r).iter().enumerate() {
                    s[c] += x;
                    s2[c] += x * x;
                }
            }
            n += t.rows() as f64;
        }
        if n == 0.0 {
            return Err(Error::Invalid("no rows to fit a normalization".into()));
        }
        let mean: Vec<f64> = s.iter().map(|x| x / n).collect();
        let std = s2
            .iter()
            .zip(&mean)
            .map(|(q, m)| {
                let v = (q / n - m * m).max(0.0).sqrt();
                if v > MIN_STD {
                    v
                } else {
                    1.0
                }
            })
            .collect();
        Ok(ColumnNorm { mean, std })
    }

    pub fn apply(&self, t: &Tensor) -> Tensor {
        Tensor::from_fn(t.rows(), t.cols(), |r, c| (t.get(r, c) - self.mean[c]) / self.std[c])
    }
}

/// Input and label scaling of one training run.
///
/// Node features and tokens are standardized per column, waveform stack
/// rows are divided by their RMS, and WSS labels are divided by the RMS
/// vector magnitude (no shift, so directions are preserved).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Normalizer {
    pub node: ColumnNorm,
    pub tokens: ColumnNorm,
    pub wave_rms: Vec<f64>,
    pub label_scale: f64,
}

fn rms(values: impl Iterator<Item = f64>) -> f64 {
    let (mut s, mut n) = (0.0, 0.0);
    for v in values {
        s += v * v;
        n += 1.0;
    }
    let r = if n > 0.0 { (s / n).sqrt() } else { 0.0 };
    if r > MIN_STD {
        r
    } else {
        1.0
    }
}

impl Normalizer {
    pub fn fit(inputs: &[&CaseInputs], labels: &[&WssSeries]) -> Result<Self> {
        if inputs.is_empty() || inputs.len() != labels.len() {
            return Err(Error::Invalid("normalizer needs matching non-empty inputs and labels".into()));
        }
        let node = ColumnNorm::fit(inputs.iter().map(|c| &c.node_feat))?;
        let tokens = ColumnNorm::fit(inputs.iter().map(|c| &c.tokens))?;
        let channels = inputs.iter().find_map(|c| c.wave.as_ref().map(|w| w.rows())).unwrap_or(0);
        let wave_rms = (0..channels)
            .map(|k| rms(inputs.iter().filter_map(|c| c.wave.as_ref()).flat_map(|w| w.row(k).to_vec())))
            .collect();
        let label_scale = rms(labels.iter().flat_map(|s| s.frames().iter().flat_map(|f| f.magnitudes())));
        Ok(Normalizer {
            node,
            tokens,
            wave_rms,
            label_scale,
        })
    }

    pub fn inputs(&self, raw: &CaseInputs) -> CaseInputs {
        let wave = raw.wave.as_ref().map(|w| {
            Tensor::from_fn(w.rows(), w.cols(), |r, c| w.get(r, c) / self.wave_rms.get(r).copied().unwrap_or(1.0))
        });
        CaseInputs {
            node_feat: self.node.apply(&raw.node_feat),
            src: raw.src.clone(),
            dst: raw.dst.clone(),
            edge_feat: raw.edge_feat.clone(),
            tokens: self.tokens.apply(&raw.tokens),
            wave,
        }
    }

    /// `N x 3` normalized target for one frame.
    pub fn target_frame(&self, labels: &WssSeries, frame: usize) -> Tensor {
        let mut t = labels.frame_tensor(frame);
        t.scale_assign(1.0 / self.label_scale);
        t
    }

    /// `N x 3T` normalized target, frame blocks side by side.
    pub fn target_series(&self, labels: &WssSeries) -> Tensor {
        let mut t = labels.node_major();
        t.scale_assign(1.0 / self.label_scale);
        t
    }

    /// Physical-unit series from `N x 3T` normalized model output.
    pub fn series(&self, out: &Tensor, times: Vec<f64>) -> Result<WssSeries> {
        let mut t = out.clone();
        t.scale_assign(self.label_scale);
        WssSeries::from_node_major(&t, times)
    }
}
