//! Hybrid local/global graph transformer.

use std::rc::Rc;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{CaseInputs, FeatureSet};
use crate::autograd::{Graph, LayerNorm, Linear, Mlp, ParamStore, Tensor, Var};
use crate::encoding::EDGE_WIDTH;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GpsConfig {
    pub hidden: usize,
    pub blocks: usize,
    pub heads: usize,
    /// Self-weight of the local update, `(1 + eps) h_i`.
    pub eps: f64,
    pub features: FeatureSet,
}

impl Default for GpsConfig {
    fn default() -> Self {
        GpsConfig {
            hidden: 64,
            blocks: 4,
            heads: 4,
            eps: 0.0,
            features: FeatureSet::default(),
        }
    }
}

/// Edge-conditioned sum-aggregation message passing.
#[derive(Debug, Clone)]
pub struct LocalMp {
    pub eps: f64,
    edge_proj: Linear,
    mlp: Mlp,
}

impl LocalMp {
    pub fn new(store: &mut ParamStore, name: &str, width: usize, eps: f64, rng: &mut impl Rng) -> Self {
        LocalMp {
            eps,
            edge_proj: Linear::new(store, &format!("{name}.edge"), EDGE_WIDTH, width, true, rng),
            mlp: Mlp::new(store, &format!("{name}.mlp"), width, width, width, rng),
        }
    }

    pub fn forward(
        &self,
        g: &mut Graph,
        store: &ParamStore,
        h: Var,
        src: &Rc<Vec<usize>>,
        dst: &Rc<Vec<usize>>,
        e_feat: Var,
    ) -> Var {
        let n = g.shape(h).0;
        let self_term = g.scale(h, 1.0 + self.eps);
        let pre = if src.is_empty() {
            self_term
        } else {
            let hj = g.gather_rows(h, src.clone());
            let pe = self.edge_proj.forward(g, store, e_feat);
            let m = g.add(hj, pe);
            let m = g.gelu(m);
            let agg = g.scatter_add_rows(m, dst.clone(), n);
            g.add(self_term, agg)
        };
        self.mlp.forward(g, store, pre)
    }
}

/// Inference-only evaluation of a [`LocalMp`] layer.
pub fn local_mp(layer: &LocalMp, store: &ParamStore, h: &Tensor, edges: &[[usize; 2]], e_feat: &Tensor) -> Tensor {
    let mut g = Graph::new();
    let hv = g.constant(h.clone());
    let ev = g.constant(e_feat.clone());
    let src = Rc::new(edges.iter().map(|e| e[0]).collect());
    let dst = Rc::new(edges.iter().map(|e| e[1]).collect());
    let out = layer.forward(&mut g, store, hv, &src, &dst, ev);
    g.value(out).clone()
}

/// Multi-head scaled dot-product self-attention over all nodes.
#[derive(Debug, Clone)]
pub struct GlobalAttention {
    pub heads: usize,
    qkv: Linear,
    out: Linear,
}

impl GlobalAttention {
    pub fn new(store: &mut ParamStore, name: &str, width: usize, heads: usize, rng: &mut impl Rng) -> Result<Self> {
        if heads == 0 || width % heads != 0 {
            return Err(Error::Invalid(format!("width {width} not divisible into {heads} heads")));
        }
        Ok(GlobalAttention {
            heads,
            qkv: Linear::new(store, &format!("{name}.qkv"), width, 3 * width, true, rng),
            out: Linear::new(store, &format!("{name}.out"), width, width, true, rng),
        })
    }

    /// Returns the output and the per-head attention matrices.
    pub fn forward_with_weights(&self, g: &mut Graph, store: &ParamStore, h: Var) -> (Var, Vec<Var>) {
        let width = g.shape(h).1;
        let dh = width / self.heads;
        let qkv = self.qkv.forward(g, store, h);
        let mut outs = Vec::with_capacity(self.heads);
        let mut weights = Vec::with_capacity(self.heads);
        for k in 0..self.heads {
            let q = g.slice_cols(qkv, k * dh, dh);
            let kk = g.slice_cols(qkv, width + k * dh, dh);
            let v = g.slice_cols(qkv, 2 * width + k * dh, dh);
            let s = g.matmul_t(q, kk, true);
            let s = g.scale(s, 1.0 / (dh as f64).sqrt());
            let a = g.softmax_rows(s);
            outs.push(g.matmul(a, v));
            weights.push(a);
        }
        let cat = if outs.len() == 1 { outs[0] } else { g.concat_cols(&outs) };
        (self.out.forward(g, store, cat), weights)
    }

    pub fn forward(&self, g: &mut Graph, store: &ParamStore, h: Var) -> Var {
        self.forward_with_weights(g, store, h).0
    }
}

/// Inference-only evaluation of a [`GlobalAttention`] layer, with weights.
pub fn global_attention(layer: &GlobalAttention, store: &ParamStore, h: &Tensor) -> (Tensor, Vec<Tensor>) {
    let mut g = Graph::new();
    let hv = g.constant(h.clone());
    let (out, ws) = layer.forward_with_weights(&mut g, store, hv);
    (g.value(out).clone(), ws.iter().map(|&w| g.value(w).clone()).collect())
}

#[derive(Debug, Clone)]
pub struct GpsBlock {
    wave: Linear,
    norm1: LayerNorm,
    local: LocalMp,
    global: GlobalAttention,
    norm2: LayerNorm,
    ffn: Mlp,
}

impl GpsBlock {
    fn new(store: &mut ParamStore, name: &str, cfg: &GpsConfig, wave_width: usize, rng: &mut impl Rng) -> Result<Self> {
        let h = cfg.hidden;
        Ok(GpsBlock {
            wave: Linear::new(store, &format!("{name}.wave"), wave_width, h, true, rng),
            norm1: LayerNorm::new(store, &format!("{name}.norm1"), h),
            local: LocalMp::new(store, &format!("{name}.local"), h, cfg.eps, rng),
            global: GlobalAttention::new(store, &format!("{name}.attn"), h, cfg.heads, rng)?,
            norm2: LayerNorm::new(store, &format!("{name}.norm2"), h),
            ffn: Mlp::new(store, &format!("{name}.ffn"), h, 2 * h, h, rng),
        })
    }

    #[allow(clippy::too_many_arguments)]
    fn forward(
        &self,
        g: &mut Graph,
        store: &ParamStore,
        x: Var,
        wf: Var,
        src: &Rc<Vec<usize>>,
        dst: &Rc<Vec<usize>>,
        e_feat: Var,
    ) -> Var {
        let w = self.wave.forward(g, store, wf);
        let x = g.add_row(x, w);
        let xn = self.norm1.forward(g, store, x);
        let loc = self.local.forward(g, store, xn, src, dst, e_feat);
        let glob = self.global.forward(g, store, xn);
        let x = g.add(x, loc);
        let x = g.add(x, glob);
        let xn = self.norm2.forward(g, store, x);
        let f = self.ffn.forward(g, store, xn);
        g.add(x, f)
    }
}

/// Graph transformer predicting one WSS frame.
#[derive(Debug, Clone)]
pub struct GpsModel {
    pub config: GpsConfig,
    pub wave_width: usize,
    columns: Vec<usize>,
    input: Linear,
    blocks: Vec<GpsBlock>,
    norm: LayerNorm,
    head: Linear,
}

impl GpsModel {
    pub fn new(store: &mut ParamStore, name: &str, config: GpsConfig, wave_width: usize, rng: &mut impl Rng) -> Result<Self> {
        let columns = config.features.columns();
        let h = config.hidden;
        let input = Linear::new(store, &format!("{name}.input"), columns.len(), h, true, rng);
        let blocks = (0..config.blocks)
            .map(|b| GpsBlock::new(store, &format!("{name}.block{b}"), &config, wave_width, rng))
            .collect::<Result<_>>()?;
        Ok(GpsModel {
            norm: LayerNorm::new(store, &format!("{name}.norm"), h),
            head: Linear::new(store, &format!("{name}.head"), h, 3, true, rng),
            config,
            wave_width,
            columns,
            input,
            blocks,
        })
    }

    /// `wf` is the `1 x F` waveform frame; returns `N x 3`.
    pub fn forward(&self, g: &mut Graph, store: &ParamStore, inputs: &CaseInputs, wf: Var) -> Result<Var> {
        if g.shape(wf) != (1, self.wave_width) {
            return Err(Error::Shape(format!(
                "waveform frame is {:?}, model expects 1 x {}",
                g.shape(wf),
                self.wave_width
            )));
        }
        let feat = g.constant(inputs.select(&self.columns)?);
        let e_feat = g.constant(inputs.edge_feat.clone());
        let src = Rc::new(inputs.src.clone());
        let dst = Rc::new(inputs.dst.clone());
        let mut x = self.input.forward(g, store, feat);
        for b in &self.blocks {
            x = b.forward(g, store, x, wf, &src, &dst, e_feat);
        }
        let x = self.norm.forward(g, store, x);
        Ok(self.head.forward(g, store, x))
    }
}

/// Inference-only single-frame prediction.
pub fn gps_forward(model: &GpsModel, store: &ParamStore, inputs: &CaseInputs, wf_frame: &[f64]) -> Result<Tensor> {
    let mut g = Graph::new();
    let wf = g.constant(Tensor::row_vector(wf_frame.to_vec()));
    let out = model.forward(&mut g, store, inputs, wf)?;
    Ok(g.value(out).clone())
}
