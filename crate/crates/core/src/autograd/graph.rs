use std::collections::HashMap;
use std::rc::Rc;

use super::params::{ParamId, ParamStore};
use super::tensor::{gemm_acc, Tensor};
use crate::linalg::CsrMatrix;

const GELU_C: f64 = 0.797_884_560_802_865_4; // sqrt(2 / pi)
const GELU_A: f64 = 0.044_715;

/// Handle to a value recorded on a [`Graph`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Var(usize);

enum Op {
    Leaf,
    MatMul(Var, Var, bool),
    Add(Var, Var),
    Sub(Var, Var),
    Mul(Var, Var),
    AddRow(Var, Var),
    MulRow(Var, Var),
    RepeatRows(Var),
    Scale(Var, f64),
    Gelu(Var),
    SoftmaxRows(Var),
    LayerNormRows(Var, Vec<f64>),
    GatherRows(Var, Rc<Vec<usize>>),
    ScatterAddRows(Var, Rc<Vec<usize>>),
    SpMM(Rc<CsrMatrix>, Var),
    ConcatCols(Vec<Var>),
    SliceCols(Var, usize),
    ConcatRows(Vec<Var>),
    SliceRows(Var, usize),
    Transpose(Var),
    Reshape(Var),
    SumAll(Var),
    MseLoss(Var, Tensor),
}

struct Node {
    value: Tensor,
    op: Op,
    needs_grad: bool,
}

/// Tape for reverse-mode differentiation of one forward pass.
#[derive(Default)]
pub struct Graph {
    nodes: Vec<Node>,
    params: HashMap<ParamId, Var>,
}

/// Gradients produced by [`Graph::backward`].
pub struct Gradients {
    nodes: Vec<Option<Tensor>>,
    params: Vec<(ParamId, Var)>,
}

impl Gradients {
    pub fn of(&self, v: Var) -> Option<&Tensor> {
        self.nodes[v.0].as_ref()
    }

    /// Parameter gradients; parameters that did not influence the loss are absent.
    pub fn params(&self) -> impl Iterator<Item = (ParamId, &Tensor)> + '_ {
        self.params
            .iter()
            .filter_map(|&(p, v)| self.nodes[v.0].as_ref().map(|t| (p, t)))
    }

    pub fn param(&self, id: ParamId) -> Option<&Tensor> {
        self.params
            .iter()
            .find(|(p, _)| *p == id)
            .and_then(|&(_, v)| self.nodes[v.0].as_ref())
    }

    pub fn global_norm(&self) -> f64 {
        self.params().map(|(_, g)| g.sq_norm()).sum::<f64>().sqrt()
    }
}

fn colsum(g: &Tensor) -> Tensor {
    let mut out = vec![0.0; g.cols()];
    for r in 0..g.rows() {
        for (o, x) in out.iter_mut().zip(g.row(r)) {
            *o += x;
        }
    }
    Tensor::row_vector(out)
}

fn gelu(x: f64) -> f64 {
    0.5 * x * (1.0 + (GELU_C * (x + GELU_A * x * x * x)).tanh())
}

fn gelu_grad(x: f64) -> f64 {
    let t = (GELU_C * (x + GELU_A * x * x * x)).tanh();
    0.5 * (1.0 + t) + 0.5 * x * (1.0 - t * t) * GELU_C * (1.0 + 3.0 * GELU_A * x * x)
}

impl Graph {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    fn push(&mut self, value: Tensor, op: Op, needs_grad: bool) -> Var {
        self.nodes.push(Node { value, op, needs_grad });
        Var(self.nodes.len() - 1)
    }

    fn ng(&self, v: Var) -> bool {
        self.nodes[v.0].needs_grad
    }

    pub fn value(&self, v: Var) -> &Tensor {
        &self.nodes[v.0].value
    }

    pub fn shape(&self, v: Var) -> (usize, usize) {
        self.nodes[v.0].value.shape()
    }

    /// Non-differentiable input.
    pub fn constant(&mut self, t: Tensor) -> Var {
        self.push(t, Op::Leaf, false)
    }

    /// Differentiable leaf that is not a stored parameter.
    pub fn input(&mut self, t: Tensor) -> Var {
        self.push(t, Op::Leaf, true)
    }

    /// Bind a stored parameter; repeated calls return the same node.
    pub fn param(&mut self, store: &ParamStore, id: ParamId) -> Var {
        if let Some(&v) = self.params.get(&id) {
            return v;
        }
        let v = self.push(store.get(id).clone(), Op::Leaf, true);
        self.params.insert(id, v);
        v
    }

    /// `a * b`, or `a * b^T` when `transpose_b`.
    pub fn matmul_t(&mut self, a: Var, b: Var, transpose_b: bool) -> Var {
        let out = self.value(a).matmul(false, self.value(b), transpose_b);
        let ng = self.ng(a) || self.ng(b);
        self.push(out, Op::MatMul(a, b, transpose_b), ng)
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Var {
        self.matmul_t(a, b, false)
    }

    fn zip(&mut self, a: Var, b: Var, f: impl Fn(f64, f64) -> f64, op: Op) -> Var {
        let (va, vb) = (self.value(a), self.value(b));
        assert_eq!(va.shape(), vb.shape(), "elementwise shape mismatch");
        let data = va.data().iter().zip(vb.data()).map(|(&x, &y)| f(x, y)).collect();
        let out = Tensor::new(va.rows(), va.cols(), data);
        let ng = self.ng(a) || self.ng(b);
        self.push(out, op, ng)
    }

    pub fn add(&mut self, a: Var, b: Var) -> Var {
        self.zip(a, b, |x, y| x + y, Op::Add(a, b))
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Var {
        self.zip(a, b, |x, y| x - y, Op::Sub(a, b))
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Var {
        self.zip(a, b, |x, y| x * y, Op::Mul(a, b))
    }

    fn row_op(&mut self, a: Var, r: Var, f: impl Fn(f64, f64) -> f64, op: Op) -> Var {
        let (va, vr) = (self.value(a), self.value(r));
        assert_eq!(vr.shape(), (1, va.cols()), "row broadcast shape");
        let mut out = va.clone();
        for i in 0..out.rows() {
            for (x, &y) in out.row_mut(i).iter_mut().zip(vr.data()) {
                *x = f(*x, y);
            }
        }
        let ng = self.ng(a) || self.ng(r);
        self.push(out, op, ng)
    }

    /// Add a `1 x C` row to every row of `a`.
    pub fn add_row(&mut self, a: Var, row: Var) -> Var {
        self.row_op(a, row, |x, y| x + y, Op::AddRow(a, row))
    }

    /// Multiply every row of `a` elementwise by a `1 x C` row.
    pub fn mul_row(&mut self, a: Var, row: Var) -> Var {
        self.row_op(a, row, |x, y| x * y, Op::MulRow(a, row))
    }

    /// Tile a `1 x C` row `n` times.
    pub fn repeat_rows(&mut self, row: Var, n: usize) -> Var {
        let v = self.value(row);
        assert_eq!(v.rows(), 1, "repeat_rows needs a single row");
        let mut data = Vec::with_capacity(n * v.cols());
        for _ in 0..n {
            data.extend_from_slice(v.data());
        }
        let out = Tensor::new(n, v.cols(), data);
        let ng = self.ng(row);
        self.push(out, Op::RepeatRows(row), ng)
    }

    pub fn scale(&mut self, a: Var, s: f64) -> Var {
        let out = self.value(a).map(|x| x * s);
        let ng = self.ng(a);
        self.push(out, Op::Scale(a, s), ng)
    }

    /// GELU, tanh approximation.
    pub fn gelu(&mut self, a: Var) -> Var {
        let out = self.value(a).map(gelu);
        let ng = self.ng(a);
        self.push(out, Op::Gelu(a), ng)
    }

    pub fn softmax_rows(&mut self, a: Var) -> Var {
        let mut out = self.value(a).clone();
        for r in 0..out.rows() {
            let row = out.row_mut(r);
            let m = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let mut s = 0.0;
            for x in row.iter_mut() {
                *x = (*x - m).exp();
                s += *x;
            }
            row.iter_mut().for_each(|x| *x /= s);
        }
        let ng = self.ng(a);
        self.push(out, Op::SoftmaxRows(a), ng)
    }

    /// Per-row standardization without affine terms.
    pub fn layer_norm_rows(&mut self, a: Var, eps: f64) -> Var {
        let mut out = self.value(a).clone();
        let c = out.cols() as f64;
        let mut inv_std = Vec::with_capacity(out.rows());
        for r in 0..out.rows() {
            let row = out.row_mut(r);
            let mean = row.iter().sum::<f64>() / c;
            let var = row.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / c;
            let is = 1.0 / (var + eps).sqrt();
            row.iter_mut().for_each(|x| *x = (*x - mean) * is);
            inv_std.push(is);
        }
        let ng = self.ng(a);
        self.push(out, Op::LayerNormRows(a, inv_std), ng)
    }

    /// `out[i] = a[idx[i]]`.
    pub fn gather_rows(&mut self, a: Var, idx: Rc<Vec<usize>>) -> Var {
        let v = self.value(a);
        let mut data = Vec::with_capacity(idx.len() * v.cols());
        for &i in idx.iter() {
            data.extend_from_slice(v.row(i));
        }
        let out = Tensor::new(idx.len(), v.cols(), data);
        let ng = self.ng(a);
        self.push(out, Op::GatherRows(a, idx), ng)
    }

    /// `out[idx[i]] += a[i]` into `rows` output rows.
    pub fn scatter_add_rows(&mut self, a: Var, idx: Rc<Vec<usize>>, rows: usize) -> Var {
        let v = self.value(a);
        assert_eq!(idx.len(), v.rows(), "scatter index length");
        let mut out = Tensor::zeros(rows, v.cols());
        for (i, &t) in idx.iter().enumerate() {
            for (o, x) in out.row_mut(t).iter_mut().zip(v.row(i)) {
                *o += x;
            }
        }
        let ng = self.ng(a);
        self.push(out, Op::ScatterAddRows(a, idx), ng)
    }

    /// Sparse times dense.
    pub fn spmm(&mut self, s: Rc<CsrMatrix>, a: Var) -> Var {
        let v = self.value(a);
        assert_eq!(s.cols(), v.rows(), "spmm shape");
        let out = Tensor::new(s.rows(), v.cols(), s.matmul_rowmajor(v.data(), v.cols()));
        let ng = self.ng(a);
        self.push(out, Op::SpMM(s, a), ng)
    }

    pub fn concat_cols(&mut self, parts: &[Var]) -> Var {
        let rows = self.value(parts[0]).rows();
        let cols: usize = parts.iter().map(|&p| self.value(p).cols()).sum();
        let mut out = Tensor::zeros(rows, cols);
        let mut off = 0;
        for &p in parts {
            let v = self.value(p);
            assert_eq!(v.rows(), rows, "concat_cols row mismatch");
            for r in 0..rows {
                out.row_mut(r)[off..off + v.cols()].copy_from_slice(v.row(r));
            }
            off += v.cols();
        }
        let ng = parts.iter().any(|&p| self.ng(p));
        self.push(out, Op::ConcatCols(parts.to_vec()), ng)
    }

    pub fn slice_cols(&mut self, a: Var, start: usize, len: usize) -> Var {
        let v = self.value(a);
        assert!(start + len <= v.cols(), "slice_cols out of range");
        let out = Tensor::from_fn(v.rows(), len, |r, c| v.get(r, start + c));
        let ng = self.ng(a);
        self.push(out, Op::SliceCols(a, start), ng)
    }

    pub fn concat_rows(&mut self, parts: &[Var]) -> Var {
        let vals: Vec<&Tensor> = parts.iter().map(|&p| self.value(p)).collect();
        let out = Tensor::vstack(&vals);
        let ng = parts.iter().any(|&p| self.ng(p));
        self.push(out, Op::ConcatRows(parts.to_vec()), ng)
    }

    pub fn slice_rows(&mut self, a: Var, start: usize, len: usize) -> Var {
        let v = self.value(a);
        assert!(start + len <= v.rows(), "slice_rows out of range");
        let out = v.slice_rows(start, len);
        let ng = self.ng(a);
        self.push(out, Op::SliceRows(a, start), ng)
    }

    pub fn transpose(&mut self, a: Var) -> Var {
        let out = self.value(a).transposed();
        let ng = self.ng(a);
        self.push(out, Op::Transpose(a), ng)
    }

    pub fn reshape(&mut self, a: Var, rows: usize, cols: usize) -> Var {
        let out = self.value(a).clone().reshaped(rows, cols);
        let ng = self.ng(a);
        self.push(out, Op::Reshape(a), ng)
    }

    pub fn sum_all(&mut self, a: Var) -> Var {
        let out = Tensor::scalar(self.value(a).sum());
        let ng = self.ng(a);
        self.push(out, Op::SumAll(a), ng)
    }

    /// Mean squared error against a fixed target.
    pub fn mse_loss(&mut self, pred: Var, target: Tensor) -> Var {
        let v = self.value(pred);
        assert_eq!(v.shape(), target.shape(), "mse target shape");
        let n = v.len().max(1) as f64;
        let l = v.data().iter().zip(target.data()).map(|(a, b)| (a - b).powi(2)).sum::<f64>() / n;
        let ng = self.ng(pred);
        self.push(Tensor::scalar(l), Op::MseLoss(pred, target), ng)
    }

    /// Reverse sweep from a scalar `loss`.
    pub fn backward(&self, loss: Var) -> Gradients {
        assert_eq!(self.value(loss).shape(), (1, 1), "loss must be scalar");
        let mut grads: Vec<Option<Tensor>> = (0..self.nodes.len()).map(|_| None).collect();
        grads[loss.0] = Some(Tensor::scalar(1.0));
        for i in (0..=loss.0).rev() {
            let node = &self.nodes[i];
            if !node.needs_grad {
                continue;
            }
            let Some(g) = grads[i].take() else {
                continue;
            };
            self.backprop_node(node, &g, &mut grads);
            grads[i] = Some(g);
        }
        let mut params: Vec<(ParamId, Var)> = self.params.iter().map(|(&p, &v)| (p, v)).collect();
        params.sort_by_key(|(p, _)| *p);
        Gradients { nodes: grads, params }
    }

    fn buf<'a>(&self, grads: &'a mut [Option<Tensor>], v: Var) -> Option<&'a mut Tensor> {
        if !self.nodes[v.0].needs_grad {
            return None;
        }
        let (r, c) = self.shape(v);
        Some(grads[v.0].get_or_insert_with(|| Tensor::zeros(r, c)))
    }

    fn acc(&self, grads: &mut [Option<Tensor>], v: Var, f: impl Fn(usize, f64) -> f64, g: &Tensor) {
        if let Some(b) = self.buf(grads, v) {
            for (i, (o, &x)) in b.data_mut().iter_mut().zip(g.data()).enumerate() {
                *o += f(i, x);
            }
        }
    }

    fn backprop_node(&self, node: &Node, g: &Tensor, grads: &mut [Option<Tensor>]) {
        match &node.op {
            Op::Leaf => {}
            &Op::MatMul(a, b, tb) => {
                let (va, vb) = (self.value(a), self.value(b));
                if let Some(ga) = self.buf(grads, a) {
                    // C = A op(B): dA = G op(B)^T
                    gemm_acc(g, false, vb, !tb, ga.data_mut());
                }
                if let Some(gb) = self.buf(grads, b) {
                    if tb {
                        gemm_acc(g, true, va, false, gb.data_mut());
                    } else {
                        gemm_acc(va, true, g, false, gb.data_mut());
                    }
                }
            }
            &Op::Add(a, b) => {
                self.acc(grads, a, |_, x| x, g);
                self.acc(grads, b, |_, x| x, g);
            }
            &Op::Sub(a, b) => {
                self.acc(grads, a, |_, x| x, g);
                self.acc(grads, b, |_, x| -x, g);
            }
            &Op::Mul(a, b) => {
                let (va, vb) = (self.value(a).data(), self.value(b).data());
                self.acc(grads, a, |i, x| x * vb[i], g);
                self.acc(grads, b, |i, x| x * va[i], g);
            }
            &Op::AddRow(a, r) => {
                self.acc(grads, a, |_, x| x, g);
                self.acc(grads, r, |_, x| x, &colsum(g));
            }
            &Op::MulRow(a, r) => {
                let (va, vr) = (self.value(a), self.value(r).data());
                let c = va.cols();
                self.acc(grads, a, |i, x| x * vr[i % c], g);
                if self.ng(r) {
                    let prod = Tensor::new(g.rows(), c, g.data().iter().zip(va.data()).map(|(x, y)| x * y).collect());
                    self.acc(grads, r, |_, x| x, &colsum(&prod));
                }
            }
            &Op::RepeatRows(a) => self.acc(grads, a, |_, x| x, &colsum(g)),
            &Op::Scale(a, s) => self.acc(grads, a, |_, x| x * s, g),
            &Op::Gelu(a) => {
                let va = self.value(a).data();
                self.acc(grads, a, |i, x| x * gelu_grad(va[i]), g);
            }
            &Op::SoftmaxRows(a) => {
                let y = &node.value;
                let c = y.cols();
                let dots: Vec<f64> = (0..y.rows())
                    .map(|r| y.row(r).iter().zip(g.row(r)).map(|(a, b)| a * b).sum())
                    .collect();
                let yd = y.data();
                self.acc(grads, a, |i, x| yd[i] * (x - dots[i / c]), g);
            }
            Op::LayerNormRows(a, inv_std) => {
                let y = &node.value;
                let c = y.cols();
                let cf = c as f64;
                let mut stats = Vec::with_capacity(y.rows());
                for r in 0..y.rows() {
                    let mg = g.row(r).iter().sum::<f64>() / cf;
                    let mgy = g.row(r).iter().zip(y.row(r)).map(|(a, b)| a * b).sum::<f64>() / cf;
                    stats.push((mg, mgy));
                }
                let yd = y.data();
                self.acc(
                    grads,
                    *a,
                    |i, x| {
                        let r = i / c;
                        inv_std[r] * (x - stats[r].0 - yd[i] * stats[r].1)
                    },
                    g,
                );
            }
            Op::GatherRows(a, idx) => {
                if let Some(b) = self.buf(grads, *a) {
                    for (i, &src) in idx.iter().enumerate() {
                        for (o, x) in b.row_mut(src).iter_mut().zip(g.row(i)) {
                            *o += x;
                        }
                    }
                }
            }
            Op::ScatterAddRows(a, idx) => {
                if let Some(b) = self.buf(grads, *a) {
                    for (i, &t) in idx.iter().enumerate() {
                        for (o, x) in b.row_mut(i).iter_mut().zip(g.row(t)) {
                            *o += x;
                        }
                    }
                }
            }
            Op::SpMM(s, a) => {
                if let Some(b) = self.buf(grads, *a) {
                    s.matmul_t_rowmajor_acc(g.data(), g.cols(), b.data_mut());
                }
            }
            Op::ConcatCols(parts) => {
                let mut off = 0;
                for &p in parts {
                    let w = self.value(p).cols();
                    if let Some(b) = self.buf(grads, p) {
                        for r in 0..g.rows() {
                            for (o, x) in b.row_mut(r).iter_mut().zip(&g.row(r)[off..off + w]) {
                                *o += x;
                            }
                        }
                    }
                    off += w;
                }
            }
            &Op::SliceCols(a, start) => {
                if let Some(b) = self.buf(grads, a) {
                    for r in 0..g.rows() {
                        for (o, x) in b.row_mut(r)[start..start + g.cols()].iter_mut().zip(g.row(r)) {
                            *o += x;
                        }
                    }
                }
            }
            Op::ConcatRows(parts) => {
                let mut off = 0;
                for &p in parts {
                    let (rows, cols) = self.shape(p);
                    if let Some(b) = self.buf(grads, p) {
                        for (o, x) in b.data_mut().iter_mut().zip(&g.data()[off * cols..(off + rows) * cols]) {
                            *o += x;
                        }
                    }
                    off += rows;
                }
            }
            &Op::SliceRows(a, start) => {
                if let Some(b) = self.buf(grads, a) {
                    let c = g.cols();
                    for (o, x) in b.data_mut()[start * c..(start + g.rows()) * c].iter_mut().zip(g.data()) {
                        *o += x;
                    }
                }
            }
            &Op::Transpose(a) => self.acc(grads, a, |_, x| x, &g.transposed()),
            &Op::Reshape(a) => self.acc(grads, a, |_, x| x, g),
            &Op::SumAll(a) => {
                let s = g.data()[0];
                if let Some(b) = self.buf(grads, a) {
                    b.data_mut().iter_mut().for_each(|o| *o += s);
                }
            }
            Op::MseLoss(p, t) => {
                let vp = self.value(*p).data();
                let td = t.data();
                let k = 2.0 * g.data()[0] / vp.len().max(1) as f64;
                if let Some(b) = self.buf(grads, *p) {
                    for (i, o) in b.data_mut().iter_mut().enumerate() {
                        *o += k * (vp[i] - td[i]);
                    }
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::autograd::check::{finite_difference_check, random_tensor};

    /// Check every differentiable input of a scalar-valued builder.
    fn check(inputs: Vec<Tensor>, f: impl Fn(&mut Graph, &[Var]) -> Var) {
        let err = finite_difference_check(&inputs, |g, vs| f(g, vs));
        assert!(err < 1e-5, "max relative error {err}");
    }

    /// Reduce an arbitrary tensor to a scalar with non-uniform weights so
    /// that every output entry matters.
    fn weigh(g: &mut Graph, v: Var) -> Var {
        let (r, c) = g.shape(v);
        let w = g.constant(Tensor::from_fn(r, c, |i, j| ((i * 7 + j * 3) as f64 * 0.61).sin()));
        let m = g.mul(v, w);
        g.sum_all(m)
    }

    #[test]
    fn elementwise_and_broadcast_ops() {
        for seed in 0..3 {
            let a = random_tensor(4, 5, seed);
            let b = random_tensor(4, 5, seed + 10);
            let r = random_tensor(1, 5, seed + 20);
            check(vec![a.clone(), b.clone(), r.clone()], |g, v| {
                let s = g.add(v[0], v[1]);
                let d = g.sub(s, v[1]);
                let m = g.mul(d, v[1]);
                let ar = g.add_row(m, v[2]);
                let mr = g.mul_row(ar, v[2]);
                let sc = g.scale(mr, -1.7);
                let ge = g.gelu(sc);
                let rep = g.repeat_rows(v[2], 4);
                let out = g.add(ge, rep);
                weigh(g, out)
            });
        }
    }

    #[test]
    fn matmul_both_layouts() {
        for seed in 0..3 {
            let a = random_tensor(3, 4, seed);
            let b = random_tensor(4, 2, seed + 1);
            let c = random_tensor(5, 4, seed + 2);
            check(vec![a, b, c], |g, v| {
                let ab = g.matmul(v[0], v[1]);
                let act = g.matmul_t(v[0], v[2], true);
                let x = weigh(g, ab);
                let y = weigh(g, act);
                g.add(x, y)
            });
        }
    }

    #[test]
    fn softmax_layernorm_transpose_reshape() {
        for seed in 0..3 {
            check(vec![random_tensor(3, 6, seed)], |g, v| {
                let s = g.softmax_rows(v[0]);
                let l = g.layer_norm_rows(v[0], 1e-5);
                let t = g.transpose(l);
                let t2 = g.transpose(t);
                let r = g.reshape(s, 6, 3);
                let r2 = g.reshape(r, 3, 6);
                let sum = g.add(t2, r2);
                weigh(g, sum)
            });
        }
    }

    #[test]
    fn indexing_ops() {
        let idx = Rc::new(vec![2usize, 0, 2, 1, 3]);
        let s = Rc::new(CsrMatrix::from_triplets(
            3,
            4,
            &[(0, 0, 1.5), (0, 3, -0.5), (1, 1, 2.0), (2, 2, 0.7), (2, 0, 0.1)],
        ));
        for seed in 0..3 {
            let idx = idx.clone();
            let s = s.clone();
            check(vec![random_tensor(4, 3, seed), random_tensor(2, 3, seed + 5)], move |g, v| {
                let ga = g.gather_rows(v[0], idx.clone());
                let sc = g.scatter_add_rows(ga, idx.clone(), 4);
                let sp = g.spmm(s.clone(), sc);
                let cc = g.concat_cols(&[sp, sp]);
                let sl = g.slice_cols(cc, 2, 3);
                let cr = g.concat_rows(&[sl, v[1]]);
                let sr = g.slice_rows(cr, 1, 4);
                weigh(g, sr)
            });
        }
    }

    #[test]
    fn mse_loss_gradient() {
        for seed in 0..3 {
            let t = random_tensor(4, 3, seed + 100);
            check(vec![random_tensor(4, 3, seed)], move |g, v| g.mse_loss(v[0], t.clone()));
        }
    }

    #[test]
    fn softmax_rows_sum_to_one() {
        let mut g = Graph::new();
        let x = g.constant(random_tensor(5, 7, 3).map(|v| v * 30.0));
        let s = g.softmax_rows(x);
        for r in 0..5 {
            assert!((g.value(s).row(r).iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn constants_get_no_gradient() {
        let mut g = Graph::new();
        let c = g.constant(Tensor::full(2, 2, 1.0));
        let x = g.input(Tensor::full(2, 2, 2.0));
        let m = g.mul(c, x);
        let l = g.sum_all(m);
        let grads = g.backward(l);
        assert!(grads.of(c).is_none());
        assert_eq!(grads.of(x).unwrap().data(), &[1.0; 4]);
    }
}
