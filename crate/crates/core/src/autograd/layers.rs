use rand::Rng;

use super::{Graph, ParamId, ParamStore, Tensor, Var};

/// `x W + b`.
#[derive(Debug, Clone)]
pub struct Linear {
    pub w: ParamId,
    pub b: Option<ParamId>,
    pub d_in: usize,
    pub d_out: usize,
}

impl Linear {
    pub fn new(store: &mut ParamStore, name: &str, d_in: usize, d_out: usize, bias: bool, rng: &mut impl Rng) -> Self {
        let w = store.glorot(format!("{name}.w"), d_in, d_out, rng);
        let b = bias.then(|| store.zeros(format!("{name}.b"), 1, d_out));
        Linear { w, b, d_in, d_out }
    }

    /// Zero weights and bias, e.g. for residual branches that start as identity.
    pub fn zeroed(store: &mut ParamStore, name: &str, d_in: usize, d_out: usize) -> Self {
        let w = store.zeros(format!("{name}.w"), d_in, d_out);
        let b = Some(store.zeros(format!("{name}.b"), 1, d_out));
        Linear { w, b, d_in, d_out }
    }

    pub fn forward(&self, g: &mut Graph, store: &ParamStore, x: Var) -> Var {
        let w = g.param(store, self.w);
        let y = g.matmul(x, w);
        match self.b {
            Some(b) => {
                let b = g.param(store, b);
                g.add_row(y, b)
            }
            None => y,
        }
    }
}

/// Row-wise layer normalization with learned gain and shift.
#[derive(Debug, Clone)]
pub struct LayerNorm {
    pub gain: ParamId,
    pub shift: ParamId,
}

impl LayerNorm {
    pub fn new(store: &mut ParamStore, name: &str, d: usize) -> Self {
        LayerNorm {
            gain: store.add(format!("{name}.gain"), Tensor::full(1, d, 1.0)),
            shift: store.zeros(format!("{name}.shift"), 1, d),
        }
    }

    pub fn forward(&self, g: &mut Graph, store: &ParamStore, x: Var) -> Var {
        let n = g.layer_norm_rows(x, 1e-5);
        let gain = g.param(store, self.gain);
        let shift = g.param(store, self.shift);
        let y = g.mul_row(n, gain);
        g.add_row(y, shift)
    }
}

/// Two-layer perceptron with GELU.
#[derive(Debug, Clone)]
pub struct Mlp {
    pub l1: Linear,
    pub l2: Linear,
}

impl Mlp {
    pub fn new(store: &mut ParamStore, name: &str, d_in: usize, d_hidden: usize, d_out: usize, rng: &mut impl Rng) -> Self {
        Mlp {
            l1: Linear::new(store, &format!("{name}.0"), d_in, d_hidden, true, rng),
            l2: Linear::new(store, &format!("{name}.1"), d_hidden, d_out, true, rng),
        }
    }

    pub fn forward(&self, g: &mut Graph, store: &ParamStore, x: Var) -> Var {
        let h = self.l1.forward(g, store, x);
        let h = g.gelu(h);
        self.l2.forward(g, store, h)
    }
}
