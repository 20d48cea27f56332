//! Modal surrogate: predict coefficients in a truncated eigenbasis.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::CaseInputs;
use crate::autograd::{Graph, Mlp, ParamStore, Tensor, Var};
use crate::error::{Error, Result};
use crate::mesh::VectorField;
use crate::spectral::GhdBasis;

fn check_k(basis: &GhdBasis, k: usize) -> Result<()> {
    if k == 0 || k > basis.mode_count() {
        return Err(Error::OutOfRange {
            index: k,
            len: basis.mode_count() + 1,
        });
    }
    Ok(())
}

/// `U_{1:K}^T w`, one row per mode.
pub fn project_coefficients(basis: &GhdBasis, k: usize, w: &VectorField) -> Result<Vec<[f64; 3]>> {
    check_k(basis, k)?;
    if w.len() != basis.num_vertices() {
        return Err(Error::Shape(format!(
            "field has {} nodes, basis has {}",
            w.len(),
            basis.num_vertices()
        )));
    }
    Ok((0..k)
        .map(|i| {
            let u = basis.mode(i);
            let mut c = [0.0; 3];
            for (v, x) in w.values.iter().enumerate() {
                for a in 0..3 {
                    c[a] += u[v] * x[a];
                }
            }
            c
        })
        .collect())
}

/// `U_{1:K} c` for `K = coeffs.len()`.
pub fn reconstruct_field(basis: &GhdBasis, coeffs: &[[f64; 3]]) -> Result<VectorField> {
    check_k(basis, coeffs.len())?;
    let mut out = vec![[0.0; 3]; basis.num_vertices()];
    for (i, c) in coeffs.iter().enumerate() {
        for (o, &u) in out.iter_mut().zip(basis.mode(i)) {
            for a in 0..3 {
                o[a] += u * c[a];
            }
        }
    }
    Ok(VectorField::new(out))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SpectralConfig {
    /// Requested truncation; capped at the basis mode count.
    pub k: usize,
    pub hidden: usize,
}

impl Default for SpectralConfig {
    fn default() -> Self {
        SpectralConfig { k: 512, hidden: 128 }
    }
}

/// MLP from flattened tokens and a waveform frame to `K x 3` coefficients.
#[derive(Debug, Clone)]
pub struct SpectralSurrogate {
    pub config: SpectralConfig,
    pub k: usize,
    pub wave_width: usize,
    pub token_width: usize,
    modes: Tensor,
    mlp: Mlp,
}

impl SpectralSurrogate {
    pub fn new(
        store: &mut ParamStore,
        name: &str,
        config: SpectralConfig,
        basis: &GhdBasis,
        token_width: usize,
        wave_width: usize,
        rng: &mut impl Rng,
    ) -> Result<Self> {
        let k = config.k.min(basis.mode_count());
        check_k(basis, k)?;
        let n = basis.num_vertices();
        let modes = Tensor::from_fn(n, k, |v, i| basis.modes()[(v, i)]);
        Ok(SpectralSurrogate {
            mlp: Mlp::new(store, &format!("{name}.mlp"), token_width + wave_width, config.hidden, 3 * k, rng),
            config,
            k,
            wave_width,
            token_width,
            modes,
        })
    }

    /// Coefficients `K x 3` for one frame.
    pub fn coefficients(&self, g: &mut Graph, store: &ParamStore, inputs: &CaseInputs, wf: Var) -> Result<Var> {
        if inputs.tokens.cols() != self.token_width || g.shape(wf) != (1, self.wave_width) {
            return Err(Error::Shape(format!(
                "spectral surrogate expects tokens 1 x {} and waveform 1 x {}",
                self.token_width, self.wave_width
            )));
        }
        let tok = g.constant(inputs.tokens.clone());
        let x = g.concat_cols(&[tok, wf]);
        let c = self.mlp.forward(g, store, x);
        Ok(g.reshape(c, self.k, 3))
    }

    /// Predicted `N x 3` frame, `U_{1:K} c`.
    pub fn forward(&self, g: &mut Graph, store: &ParamStore, inputs: &CaseInputs, wf: Var) -> Result<Var> {
        if inputs.num_nodes() != self.modes.rows() {
            return Err(Error::Shape("case and basis disagree on N".into()));
        }
        let c = self.coefficients(g, store, inputs, wf)?;
        let u = g.constant(self.modes.clone());
        Ok(g.matmul(u, c))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::autograd::check::{param_gradient_check, random_tensor};
    use crate::mesh::primitives;
    use crate::spectral::compute_basis;
    use crate::surrogates::fixtures::small_case;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn field(n: usize, seed: u64) -> VectorField {
        let r = random_tensor(n, 3, seed);
        VectorField::new((0..n).map(|v| [r.get(v, 0), r.get(v, 1), r.get(v, 2)]).collect())
    }

    #[test]
    fn full_basis_round_trip() {
        let m = primitives::icosphere(1);
        let basis = compute_basis(&m, 42).unwrap();
        let w = field(42, 1);
        let c = project_coefficients(&basis, 42, &w).unwrap();
        let back = reconstruct_field(&basis, &c).unwrap();
        let diff: f64 = back
            .values
            .iter()
            .zip(&w.values)
            .flat_map(|(a, b)| (0..3).map(move |k| (a[k] - b[k]).powi(2)))
            .sum::<f64>()
            .sqrt();
        assert!(diff <= 1e-5 * w.l2_norm());
    }

    #[test]
    fn single_mode_and_kernel() {
        let m = primitives::icosphere(1);
        let basis = compute_basis(&m, 10).unwrap();
        let u3 = VectorField::new(basis.mode(2).iter().map(|&x| [x, x, x]).collect());
        let c = project_coefficients(&basis, 5, &u3).unwrap();
        for (i, row) in c.iter().enumerate() {
            let want = if i == 2 { 1.0 } else { 0.0 };
            for &x in row {
                assert!((x - want).abs() < 1e-8);
            }
        }
        let c1 = project_coefficients(&basis, 1, &field(42, 2)).unwrap();
        let r = reconstruct_field(&basis, &c1).unwrap();
        for v in &r.values {
            for k in 0..3 {
                assert!((v[k] - r.values[0][k]).abs() < 1e-9);
            }
        }
        assert!(project_coefficients(&basis, 11, &u3).is_err());
        assert!(project_coefficients(&basis, 0, &u3).is_err());
    }

    #[test]
    fn projection_is_idempotent_and_contracting() {
        let m = primitives::icosphere(1);
        let basis = compute_basis(&m, 20).unwrap();
        let w = field(42, 3);
        for k in [1, 5, 20] {
            let c = project_coefficients(&basis, k, &w).unwrap();
            let r = reconstruct_field(&basis, &c).unwrap();
            assert!(r.l2_norm() <= w.l2_norm() + 1e-12);
            let c2 = project_coefficients(&basis, k, &r).unwrap();
            for (a, b) in c.iter().zip(&c2) {
                for i in 0..3 {
                    assert!((a[i] - b[i]).abs() < 1e-8);
                }
            }
        }
    }

    fn model(seed: u64, k: usize) -> (ParamStore, SpectralSurrogate, crate::surrogates::fixtures::Fixture) {
        let f = small_case(seed, 16);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut store = ParamStore::new();
        let m = SpectralSurrogate::new(
            &mut store,
            "sp",
            SpectralConfig { k, hidden: 8 },
            &f.basis,
            f.inputs.tokens.cols(),
            4,
            &mut rng,
        )
        .unwrap();
        (store, m, f)
    }

    #[test]
    fn output_lies_in_truncated_span() {
        let (store, m, f) = model(1, 7);
        let mut g = Graph::new();
        let wf = g.constant(random_tensor(1, 4, 2));
        let y = m.forward(&mut g, &store, &f.inputs, wf).unwrap();
        let y = g.value(y);
        let field = VectorField::new((0..42).map(|v| [y.get(v, 0), y.get(v, 1), y.get(v, 2)]).collect());
        let c = project_coefficients(&f.basis, 7, &field).unwrap();
        let back = reconstruct_field(&f.basis, &c).unwrap();
        let resid: f64 = back
            .values
            .iter()
            .zip(&field.values)
            .flat_map(|(a, b)| (0..3).map(move |k| (a[k] - b[k]).powi(2)))
            .sum::<f64>()
            .sqrt();
        assert!(resid <= 1e-6 * field.l2_norm());
    }

    #[test]
    fn k_is_capped_at_mode_count() {
        let (_, m, _) = model(2, 512);
        assert_eq!(m.k, 20);
    }

    #[test]
    fn zero_coefficients_give_zero_field() {
        let m = primitives::icosphere(1);
        let basis = compute_basis(&m, 8).unwrap();
        let r = reconstruct_field(&basis, &vec![[0.0; 3]; 8]).unwrap();
        assert_eq!(r.l2_norm(), 0.0);
    }

    #[test]
    fn gradients_match_finite_differences() {
        for seed in 0..3 {
            let (store, m, f) = model(seed + 3, 10);
            let target = random_tensor(42, 3, seed);
            let wf = random_tensor(1, 4, seed + 9);
            let err = param_gradient_check(&store, 8, |g, s| {
                let w = g.constant(wf.clone());
                let y = m.forward(g, s, &f.inputs, w).unwrap();
                g.mse_loss(y, target.clone())
            });
            assert!(err <= 1e-4, "seed {seed}: {err}");
        }
    }
}
