//! Finite-difference gradient checking.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{Graph, ParamStore, Tensor, Var};

pub fn random_tensor(rows: usize, cols: usize, seed: u64) -> Tensor {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Tensor::from_fn(rows, cols, |_, _| rng.gen_range(-1.0..1.0))
}

fn rel_err(a: f64, n: f64) -> f64 {
    (a - n).abs() / (a.abs() + n.abs()).max(1e-8)
}

/// Max relative error between analytic and central-difference gradients of
/// the scalar built by `f` with respect to each of `inputs`.
pub fn finite_difference_check(inputs: &[Tensor], f: impl Fn(&mut Graph, &[Var]) -> Var) -> f64 {
    let run = |vals: &[Tensor]| -> (Graph, Vec<Var>, Var) {
        let mut g = Graph::new();
        let vars: Vec<Var> = vals.iter().map(|t| g.input(t.clone())).collect();
        let out = f(&mut g, &vars);
        (g, vars, out)
    };
    let (g, vars, out) = run(inputs);
    let grads = g.backward(out);
    let h = 1e-6;
    let mut worst = 0.0f64;
    for (k, v) in vars.iter().enumerate() {
        let analytic = grads.of(*v).cloned().unwrap_or_else(|| Tensor::zeros(inputs[k].rows(), inputs[k].cols()));
        for i in 0..inputs[k].len() {
            let mut plus = inputs.to_vec();
            plus[k].data_mut()[i] += h;
            let mut minus = inputs.to_vec();
            minus[k].data_mut()[i] -= h;
            let (gp, _, op) = run(&plus);
            let (gm, _, om) = run(&minus);
            let num = (gp.value(op).data()[0] - gm.value(om).data()[0]) / (2.0 * h);
            worst = worst.max(rel_err(analytic.data()[i], num));
        }
    }
    worst
}

/// Same check over every parameter of a store, for a loss built by `f`.
/// At most `max_per_param` entries of each parameter are probed.
pub fn param_gradient_check(
    store: &ParamStore,
    max_per_param: usize,
    f: impl Fn(&mut Graph, &ParamStore) -> Var,
) -> f64 {
    let mut g = Graph::new();
    let out = f(&mut g, store);
    let grads = g.backward(out);
    let h = 1e-5;
    let mut worst = 0.0f64;
    for id in store.ids() {
        let p = store.get(id);
        let analytic = grads.param(id).cloned().unwrap_or_else(|| Tensor::zeros(p.rows(), p.cols()));
        let stride = (p.len() / max_per_param.max(1)).max(1);
        for i in (0..p.len()).step_by(stride) {
            let eval = |delta: f64| {
                let mut s = store.clone();
                s.get_mut(id).data_mut()[i] += delta;
                let mut g = Graph::new();
                let o = f(&mut g, &s);
                g.value(o).data()[0]
            };
            let num = (eval(h) - eval(-h)) / (2.0 * h);
            let e = rel_err(analytic.data()[i], num);
            // ignore entries where both are at round-off level
            if analytic.data()[i].abs().max(num.abs()) > 1e-6 {
                worst = worst.max(e);
            }
        }
    }
    worst
}
