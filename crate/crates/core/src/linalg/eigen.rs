//! Smallest eigenpairs of a sparse symmetric matrix.
//!
//! Chebyshev-filtered subspace iteration: a block of `n + guard` vectors is
//! repeatedly passed through a Chebyshev polynomial that damps the unwanted
//! upper part of the spectrum, re-orthonormalized, and Rayleigh-Ritz
//! projected. Blocks handle repeated eigenvalues (common on symmetric
//! meshes), which single-vector Lanczos would miss.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::CsrMatrix;
use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct EigenOptions {
    /// Absolute residual tolerance `||A u - l u||` for unit `u`.
    pub tol: f64,
    /// Outer iteration cap; `None` uses `10 * n * sqrt(N)`.
    pub max_iter: Option<usize>,
    /// Chebyshev filter degree per outer iteration.
    pub degree: usize,
    pub seed: u64,
}

impl Default for EigenOptions {
    fn default() -> Self {
        EigenOptions {
            tol: 1e-8,
            max_iter: None,
            degree: 16,
            seed: 0x5eed,
        }
    }
}

#[derive(Debug, Clone)]
pub struct EigenPairs {
    /// Ascending eigenvalues.
    pub values: Vec<f64>,
    /// `N x n` matrix, one unit eigenvector per column.
    pub vectors: DMatrix<f64>,
    pub iterations: usize,
    pub max_residual: f64,
}

fn sparse_times(a: &CsrMatrix, x: &DMatrix<f64>) -> DMatrix<f64> {
    let mut y = DMatrix::zeros(x.nrows(), x.ncols());
    for j in 0..x.ncols() {
        let col = x.column(j);
        let mut out = y.column_mut(j);
        a.matvec_into(col.as_slice(), out.as_mut_slice());
    }
    y
}

fn orthonormalize(x: DMatrix<f64>) -> DMatrix<f64> {
    // two passes of Householder QR for robustness with nearly dependent blocks
    let q = x.qr().q();
    q.qr().q()
}

/// Rayleigh-Ritz: returns rotated basis and ascending Ritz values.
fn rayleigh_ritz(a: &CsrMatrix, x: &DMatrix<f64>) -> (DMatrix<f64>, Vec<f64>, DMatrix<f64>) {
    let ax = sparse_times(a, x);
    let mut h = x.transpose() * &ax;
    h = (&h + h.transpose()) * 0.5;
    let eig = SymmetricEigen::new(h);
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let p = order.len();
    let mut v = DMatrix::zeros(p, p);
    let mut vals = Vec::with_capacity(p);
    for (k, &i) in order.iter().enumerate() {
        v.set_column(k, &eig.eigenvectors.column(i));
        vals.push(eig.eigenvalues[i]);
    }
    (x * &v, vals, ax * v)
}

fn chebyshev_filter(
    a: &CsrMatrix,
    x: &DMatrix<f64>,
    degree: usize,
    lo: f64,
    cut: f64,
    hi: f64,
) -> DMatrix<f64> {
    let e = (hi - cut) / 2.0;
    let c = (hi + cut) / 2.0;
    let mut sigma = e / (lo - c);
    let tau = 2.0 / sigma;
    let mut prev = x.clone();
    let mut y = (sparse_times(a, x) - x * c) * (sigma / e);
    for _ in 1..degree {
        let sigma_new = 1.0 / (tau - sigma);
        let next = (sparse_times(a, &y) - &y * c) * (2.0 * sigma_new / e) - &prev * (sigma * sigma_new);
        prev = y;
        y = next;
        sigma = sigma_new;
    }
    y
}

/// Flip each column so its first significant entry is positive.
pub fn canonical_signs(v: &mut DMatrix<f64>) {
    for j in 0..v.ncols() {
        let mut col = v.column_mut(j);
        let amax = col.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        if let Some(first) = col.iter().copied().find(|x| x.abs() > 1e-8 * amax) {
            if first < 0.0 {
                col.neg_mut();
            }
        }
    }
}

/// The `n` smallest eigenpairs of symmetric `a`, ascending, with
/// deterministic signs (first significant entry positive).
pub fn smallest_eigenpairs(a: &CsrMatrix, n: usize, opts: &EigenOptions) -> Result<EigenPairs> {
    let dim = a.rows();
    if a.cols() != dim {
        return Err(Error::Shape("eigenproblem needs a square matrix".into()));
    }
    if n == 0 || n > dim {
        return Err(Error::Invalid(format!("requested {n} eigenpairs of a {dim}x{dim} matrix")));
    }
    let guard = (n / 5).max(8);
    let p = (n + guard).min(dim);
    let max_iter = opts
        .max_iter
        .unwrap_or_else(|| ((10.0 * n as f64 * (dim as f64).sqrt()).ceil() as usize).max(10));

    let mut x = if p == dim {
        // the block spans everything; one projection is exact
        DMatrix::identity(dim, dim)
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
        let x0 = DMatrix::from_fn(dim, p, |_, _| StandardNormal.sample(&mut rng));
        orthonormalize(x0)
    };
    let hi = a.gershgorin_bound().max(f64::MIN_POSITIVE) * 1.01;
    let mut iterations = 0;
    loop {
        let (xr, vals, ax) = rayleigh_ritz(a, &x);
        let mut max_res = 0.0f64;
        for j in 0..n {
            let r = ax.column(j) - xr.column(j) * vals[j];
            max_res = max_res.max(r.norm());
        }
        if max_res <= opts.tol {
            let mut vectors = xr.columns(0, n).into_owned();
            canonical_signs(&mut vectors);
            return Ok(EigenPairs {
                values: vals[..n].to_vec(),
                vectors,
                iterations,
                max_residual: max_res,
            });
        }
        if iterations >= max_iter || p == dim && iterations > 2 {
            return Err(Error::EigenNotConverged {
                iterations,
                residual: max_res,
            });
        }
        let cut = vals[p - 1];
        let lo = vals[0];
        let y = if cut < hi * 0.999 {
            chebyshev_filter(a, &xr, opts.degree, lo, cut, hi)
        } else {
            sparse_times(a, &xr)
        };
        x = orthonormalize(y);
        iterations += 1;
    }
}
