//! Multi-scale Chebyshev graph U-Nets on a fixed pooling hierarchy.

use std::rc::Rc;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{CaseInputs, FeatureSet};
use crate::autograd::{Graph, Linear, Mlp, ParamStore, Tensor, Var};
use crate::error::{Error, Result};
use crate::linalg::CsrMatrix;
use crate::mesh::TriMesh;
use crate::spectral::PoolingMap;

const POWER_ITERS: usize = 20;

/// `2 L / lambda_max - I` with `L = I - D^-1/2 A D^-1/2` on mesh edges.
pub fn scaled_graph_laplacian(mesh: &TriMesh) -> CsrMatrix {
    let n = mesh.num_vertices();
    let adj = mesh.adjacency();
    let dinv: Vec<f64> = adj.iter().map(|a| 1.0 / (a.len().max(1) as f64).sqrt()).collect();
    let mut trip = Vec::new();
    for (i, nb) in adj.iter().enumerate() {
        trip.push((i, i, 1.0));
        for &j in nb {
            trip.push((i, j, -dinv[i] * dinv[j]));
        }
    }
    let lap = CsrMatrix::from_triplets(n, n, &trip);
    let lmax = power_iteration(&lap);
    let mut scaled: Vec<_> = trip.iter().map(|&(i, j, v)| (i, j, 2.0 * v / lmax)).collect();
    for i in 0..n {
        scaled.push((i, i, -1.0));
    }
    CsrMatrix::from_triplets(n, n, &scaled)
}

fn power_iteration(m: &CsrMatrix) -> f64 {
    let n = m.rows();
    // deterministic start with components along high-frequency directions
    let mut x: Vec<f64> = (0..n).map(|i| if i % 2 == 0 { 1.0 } else { -0.5 } + 0.01 * i as f64).collect();
    let mut lambda = 2.0;
    for _ in 0..POWER_ITERS {
        let nx = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        if nx == 0.0 {
            break;
        }
        x.iter_mut().for_each(|v| *v /= nx);
        let y = m.matvec(&x);
        lambda = x.iter().zip(&y).map(|(a, b)| a * b).sum::<f64>();
        x = y;
    }
    if lambda > 1e-8 {
        lambda
    } else {
        2.0
    }
}

/// Chebyshev graph convolution using terms `T_0 .. T_order`.
#[derive(Debug, Clone)]
pub struct ChebConv {
    pub order: usize,
    lin: Linear,
}

impl ChebConv {
    pub fn new(store: &mut ParamStore, name: &str, order: usize, d_in: usize, d_out: usize, rng: &mut impl Rng) -> Self {
        ChebConv {
            order,
            lin: Linear::new(store, name, (order + 1) * d_in, d_out, true, rng),
        }
    }

    pub fn forward(&self, g: &mut Graph, store: &ParamStore, lap: &Rc<CsrMatrix>, x: Var) -> Var {
        let mut terms = vec![x];
        if self.order >= 1 {
            terms.push(g.spmm(lap.clone(), x));
        }
        for k in 2..=self.order {
            let lx = g.spmm(lap.clone(), terms[k - 1]);
            let two = g.scale(lx, 2.0);
            terms.push(g.sub(two, terms[k - 2]));
        }
        let cat = if terms.len() == 1 { terms[0] } else { g.concat_cols(&terms) };
        self.lin.forward(g, store, cat)
    }
}

/// Graph operators of every level of a pooling hierarchy.
#[derive(Debug, Clone)]
pub struct UNetTopology {
    laplacians: Vec<Rc<CsrMatrix>>,
    pools: Vec<Rc<CsrMatrix>>,
    unpools: Vec<Rc<CsrMatrix>>,
}

impl UNetTopology {
    pub fn new(map: &PoolingMap) -> Result<Self> {
        let levels = map.num_levels();
        Ok(UNetTopology {
            laplacians: (0..=levels).map(|l| Rc::new(scaled_graph_laplacian(map.mesh(l)))).collect(),
            pools: (0..levels).map(|l| map.pool_matrix(l).map(Rc::new)).collect::<Result<_>>()?,
            unpools: (0..levels).map(|l| map.unpool_matrix(l).map(Rc::new)).collect::<Result<_>>()?,
        })
    }

    /// Number of pooling steps.
    pub fn num_levels(&self) -> usize {
        self.pools.len()
    }

    pub fn num_nodes(&self) -> usize {
        self.laplacians[0].rows()
    }

    pub fn laplacian(&self, level: usize) -> &Rc<CsrMatrix> {
        &self.laplacians[level]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct UNetConfig {
    pub hidden: usize,
    /// Chebyshev order `P`.
    pub order: usize,
    pub levels: usize,
    pub features: FeatureSet,
}

impl Default for UNetConfig {
    fn default() -> Self {
        UNetConfig {
            hidden: 32,
            order: 3,
            levels: 2,
            features: FeatureSet::default(),
        }
    }
}

/// Encoder/decoder over the hierarchy; `extra` width is concatenated at
/// the bottleneck.
#[derive(Debug, Clone)]
struct Backbone {
    columns: Vec<usize>,
    input: Linear,
    enc: Vec<ChebConv>,
    mid: ChebConv,
    dec: Vec<ChebConv>,
}

impl Backbone {
    fn new(store: &mut ParamStore, name: &str, cfg: &UNetConfig, extra: usize, rng: &mut impl Rng) -> Self {
        let h = cfg.hidden;
        let columns = cfg.features.columns();
        Backbone {
            input: Linear::new(store, &format!("{name}.input"), columns.len(), h, true, rng),
            columns,
            enc: (0..cfg.levels)
                .map(|l| ChebConv::new(store, &format!("{name}.enc{l}"), cfg.order, h, h, rng))
                .collect(),
            mid: ChebConv::new(store, &format!("{name}.mid"), cfg.order, h + extra, h, rng),
            dec: (0..cfg.levels)
                .map(|l| ChebConv::new(store, &format!("{name}.dec{l}"), cfg.order, 2 * h, h, rng))
                .collect(),
        }
    }

    fn forward(
        &self,
        g: &mut Graph,
        store: &ParamStore,
        topo: &UNetTopology,
        inputs: &CaseInputs,
        extra: Option<Var>,
    ) -> Result<Var> {
        if topo.num_levels() != self.enc.len() {
            return Err(Error::Shape(format!(
                "model has {} levels, pooling map has {}",
                self.enc.len(),
                topo.num_levels()
            )));
        }
        if inputs.num_nodes() != topo.num_nodes() {
            return Err(Error::Shape(format!(
                "case has {} nodes, hierarchy expects {}",
                inputs.num_nodes(),
                topo.num_nodes()
            )));
        }
        let feat = g.constant(inputs.select(&self.columns)?);
        let mut x = self.input.forward(g, store, feat);
        let mut skips = Vec::with_capacity(self.enc.len());
        for (l, conv) in self.enc.iter().enumerate() {
            let y = conv.forward(g, store, &topo.laplacians[l], x);
            let y = g.gelu(y);
            skips.push(y);
            x = g.spmm(topo.pools[l].clone(), y);
        }
        let depth = self.enc.len();
        if let Some(e) = extra {
            let n = g.shape(x).0;
            let rep = g.repeat_rows(e, n);
            x = g.concat_cols(&[x, rep]);
        }
        let y = self.mid.forward(g, store, &topo.laplacians[depth], x);
        x = g.gelu(y);
        for l in (0..depth).rev() {
            let up = g.spmm(topo.unpools[l].clone(), x);
            let cat = g.concat_cols(&[up, skips[l]]);
            let y = self.dec[l].forward(g, store, &topo.laplacians[l], cat);
            x = g.gelu(y);
        }
        Ok(x)
    }
}

/// Per-snapshot U-Net: one frame per pass, waveform frame at the bottleneck.
#[derive(Debug, Clone)]
pub struct GraphUNet {
    pub config: UNetConfig,
    pub wave_width: usize,
    backbone: Backbone,
    head: Linear,
}

impl GraphUNet {
    pub fn new(store: &mut ParamStore, name: &str, config: UNetConfig, wave_width: usize, rng: &mut impl Rng) -> Self {
        GraphUNet {
            backbone: Backbone::new(store, name, &config, wave_width, rng),
            head: Linear::new(store, &format!("{name}.head"), config.hidden, 3, true, rng),
            config,
            wave_width,
        }
    }

    pub fn forward(
        &self,
        g: &mut Graph,
        store: &ParamStore,
        topo: &UNetTopology,
        inputs: &CaseInputs,
        wf: Var,
    ) -> Result<Var> {
        if g.shape(wf) != (1, self.wave_width) {
            return Err(Error::Shape(format!("waveform frame must be 1 x {}", self.wave_width)));
        }
        let x = self.backbone.forward(g, store, topo, inputs, Some(wf))?;
        Ok(self.head.forward(g, store, x))
    }
}

/// Whole-cycle U-Net: node features cross-attend to waveform timesteps and
/// an MLP emits all frames; optional FiLM on a steady prior field.
#[derive(Debug, Clone)]
pub struct SequenceUNet {
    pub config: UNetConfig,
    pub wave_width: usize,
    pub frames: usize,
    pub film: bool,
    backbone: Backbone,
    query: Linear,
    key: Linear,
    value: Linear,
    film_scale: Option<Linear>,
    film_shift: Option<Linear>,
    decoder: Mlp,
}

impl SequenceUNet {
    pub fn new(
        store: &mut ParamStore,
        name: &str,
        config: UNetConfig,
        wave_width: usize,
        frames: usize,
        film: bool,
        rng: &mut impl Rng,
    ) -> Self {
        let h = config.hidden;
        SequenceUNet {
            backbone: Backbone::new(store, name, &config, 0, rng),
            query: Linear::new(store, &format!("{name}.q"), h, h, true, rng),
            key: Linear::new(store, &format!("{name}.k"), wave_width, h, true, rng),
            value: Linear::new(store, &format!("{name}.v"), wave_width, h, true, rng),
            film_scale: film.then(|| Linear::zeroed(store, &format!("{name}.film_scale"), 3, h)),
            film_shift: film.then(|| Linear::zeroed(store, &format!("{name}.film_shift"), 3, h)),
            decoder: Mlp::new(store, &format!("{name}.decoder"), h, 2 * h, 3 * frames, rng),
            config,
            wave_width,
            frames,
            film,
        }
    }

    /// `wf` is `T x F`; `prior` is the `N x 3` steady field when FiLM is on.
    /// Returns `N x 3T` with frame `t` in columns `3t..3t+3`.
    pub fn forward(
        &self,
        g: &mut Graph,
        store: &ParamStore,
        topo: &UNetTopology,
        inputs: &CaseInputs,
        wf: Var,
        prior: Option<&Tensor>,
    ) -> Result<Var> {
        if g.shape(wf) != (self.frames, self.wave_width) {
            return Err(Error::Shape(format!(
                "waveform features are {:?}, model expects {} x {}",
                g.shape(wf),
                self.frames,
                self.wave_width
            )));
        }
        let x = self.backbone.forward(g, store, topo, inputs, None)?;
        let q = self.query.forward(g, store, x);
        let k = self.key.forward(g, store, wf);
        let v = self.value.forward(g, store, wf);
        let s = g.matmul_t(q, k, true);
        let s = g.scale(s, 1.0 / (self.config.hidden as f64).sqrt());
        let a = g.softmax_rows(s);
        let ctx = g.matmul(a, v);
        let mut fused = g.add(x, ctx);
        if let (Some(fs), Some(fb)) = (&self.film_scale, &self.film_shift) {
            let p = prior.ok_or_else(|| Error::Invalid("FiLM model needs a steady prior".into()))?;
            if p.shape() != (inputs.num_nodes(), 3) {
                return Err(Error::Shape("steady prior must be N x 3".into()));
            }
            let pv = g.constant(p.clone());
            let ds = fs.forward(g, store, pv);
            let ones = g.constant(Tensor::full(inputs.num_nodes(), self.config.hidden, 1.0));
            let gamma = g.add(ones, ds);
            let beta = fb.forward(g, store, pv);
            let m = g.mul(fused, gamma);
            fused = g.add(m, beta);
        }
        Ok(self.decoder.forward(g, store, fused))
    }
}
