use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::GhdBasis;
use crate::error::{Error, Result};
use crate::mesh::vec3::{dot, sub, Vec3};
use crate::mesh::{vertex_normals, TriMesh};

/// Per-mode coefficient triples of a shape in a [`GhdBasis`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "TokensRepr", into = "TokensRepr")]
pub struct GhdTokens {
    coeffs: Vec<[f64; 3]>,
}

#[derive(Serialize, Deserialize)]
struct TokensRepr {
    n: usize,
    coeffs: Vec<[f64; 3]>,
}

impl TryFrom<TokensRepr> for GhdTokens {
    type Error = String;
    fn try_from(r: TokensRepr) -> std::result::Result<Self, String> {
        if r.n != r.coeffs.len() {
            return Err(format!("n = {} but {} coefficient rows", r.n, r.coeffs.len()));
        }
        Ok(GhdTokens { coeffs: r.coeffs })
    }
}

impl From<GhdTokens> for TokensRepr {
    fn from(t: GhdTokens) -> Self {
        TokensRepr {
            n: t.coeffs.len(),
            coeffs: t.coeffs,
        }
    }
}

impl GhdTokens {
    pub fn new(coeffs: Vec<[f64; 3]>) -> Self {
        GhdTokens { coeffs }
    }

    pub fn zeros(n: usize) -> Self {
        GhdTokens {
            coeffs: vec![[0.0; 3]; n],
        }
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn coeffs(&self) -> &[[f64; 3]] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [[f64; 3]] {
        &mut self.coeffs
    }

    /// Row-major `n x 3` flattening.
    pub fn flat(&self) -> Vec<f64> {
        self.coeffs.iter().flatten().copied().collect()
    }

    fn to_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.len(), 3, |i, j| self.coeffs[i][j])
    }

    fn from_matrix(m: &DMatrix<f64>) -> Self {
        GhdTokens {
            coeffs: (0..m.nrows()).map(|i| [m[(i, 0)], m[(i, 1)], m[(i, 2)]]).collect(),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let s = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&s)
    }
}

fn vertex_matrix(v: &[Vec3]) -> DMatrix<f64> {
    DMatrix::from_fn(v.len(), 3, |i, j| v[i][j])
}

fn check_tokens(basis: &GhdBasis, tokens: &GhdTokens) -> Result<()> {
    if tokens.len() != basis.mode_count() {
        return Err(Error::Shape(format!(
            "{} tokens for a {}-mode basis",
            tokens.len(),
            basis.mode_count()
        )));
    }
    Ok(())
}

fn synthesize(basis: &GhdBasis, c: &DMatrix<f64>) -> Vec<Vec3> {
    let v = basis.modes() * c;
    (0..v.nrows()).map(|i| [v[(i, 0)], v[(i, 1)], v[(i, 2)]]).collect()
}

/// `V = U C` on the canonical face list.
pub fn reconstruct(basis: &GhdBasis, tokens: &GhdTokens) -> Result<TriMesh> {
    check_tokens(basis, tokens)?;
    basis.canonical().with_vertices(synthesize(basis, &tokens.to_matrix()))
}

#[derive(Debug, Clone)]
pub struct FitOptions {
    /// Stop when the relative objective improvement falls below this.
    pub tol: f64,
    pub max_iter: usize,
    /// Weight of the point-to-plane normal-consistency term.
    pub normal_weight: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            tol: 1e-6,
            max_iter: 2000,
            normal_weight: 0.1,
        }
    }
}

#[derive(Debug, Clone)]
pub struct FitResult {
    pub tokens: GhdTokens,
    /// Canonical topology: RMS vertex error. Otherwise: symmetric mean
    /// nearest-vertex distance.
    pub residual: f64,
    pub iterations: usize,
}

fn same_topology(basis: &GhdBasis, target: &TriMesh) -> bool {
    target.num_vertices() == basis.num_vertices() && target.faces() == basis.canonical().faces()
}

/// Fit tokens to `target`: exact projection when it shares the canonical
/// topology, Chamfer descent otherwise.
pub fn fit_tokens(basis: &GhdBasis, target: &TriMesh, opts: &FitOptions) -> Result<FitResult> {
    if same_topology(basis, target) {
        let v = vertex_matrix(target.vertices());
        let c = basis.modes().transpose() * &v;
        let r = &v - basis.modes() * &c;
        return Ok(FitResult {
            tokens: GhdTokens::from_matrix(&c),
            residual: r.norm() / (v.nrows() as f64).sqrt(),
            iterations: 0,
        });
    }
    chamfer_descent(basis, target, opts)
}

struct Objective {
    value: f64,
    /// `N x 3` gradient w.r.t. source vertex positions.
    grad: DMatrix<f64>,
    mean_dist: f64,
}

fn chamfer(src: &[Vec3], tree_src: &KdTree, tgt: &[Vec3], tree_tgt: &KdTree, tgt_n: &[Vec3], wn: f64) -> Objective {
    let ns = src.len() as f64;
    let nt = tgt.len() as f64;
    let mut grad = DMatrix::zeros(src.len(), 3);
    let mut value = 0.0;
    let mut dsum_s = 0.0;
    for (i, &p) in src.iter().enumerate() {
        let (j, d2) = tree_tgt.nearest(p);
        let d = sub(p, tgt[j]);
        let pn = dot(d, tgt_n[j]);
        value += (d2 + wn * pn * pn) / ns;
        dsum_s += d2.sqrt();
        for k in 0..3 {
            grad[(i, k)] += 2.0 * (d[k] + wn * pn * tgt_n[j][k]) / ns;
        }
    }
    let mut dsum_t = 0.0;
    for &q in tgt {
        let (i, d2) = tree_src.nearest(q);
        value += d2 / nt;
        dsum_t += d2.sqrt();
        let d = sub(src[i], q);
        for k in 0..3 {
            grad[(i, k)] += 2.0 * d[k] / nt;
        }
    }
    Objective {
        value,
        grad,
        mean_dist: 0.5 * (dsum_s / ns + dsum_t / nt),
    }
}

fn evaluate(basis: &GhdBasis, c: &DMatrix<f64>, tgt: &[Vec3], tree_tgt: &KdTree, tgt_n: &[Vec3], wn: f64) -> Objective {
    let src = synthesize(basis, c);
    let tree_src = KdTree::new(&src);
    chamfer(&src, &tree_src, tgt, tree_tgt, tgt_n, wn)
}

fn chamfer_descent(basis: &GhdBasis, target: &TriMesh, opts: &FitOptions) -> Result<FitResult> {
    let tgt = target.vertices();
    let tgt_n = vertex_normals(target)?.values;
    let tree_tgt = KdTree::new(tgt);
    let wn = opts.normal_weight;

    // start from the canonical shape itself
    let mut c = basis.modes().transpose() * vertex_matrix(basis.canonical().vertices());
    let mut cur = evaluate(basis, &c, tgt, &tree_tgt, &tgt_n, wn);
    // a unit step moves each vertex onto its one-sided nearest point
    let mut step = basis.num_vertices() as f64 / 2.0;
    let mut increases = 0;
    let mut iterations = 0;
    while iterations < opts.max_iter {
        if !cur.value.is_finite() {
            return Err(Error::FitDiverged {
                iteration: iterations,
                residual: cur.value,
            });
        }
        iterations += 1;
        let g = basis.modes().transpose() * &cur.grad;
        let mut accepted = None;
        for _ in 0..30 {
            let trial = &c - &g * step;
            let obj = evaluate(basis, &trial, tgt, &tree_tgt, &tgt_n, wn);
            if obj.value < cur.value {
                accepted = Some((trial, obj));
                break;
            }
            step *= 0.5;
        }
        let Some((trial, obj)) = accepted else {
            // no descent direction left at machine scale
            break;
        };
        // the line search guards the objective; the reported residual can still drift
        if obj.mean_dist > cur.mean_dist {
            increases += 1;
            if increases >= 10 {
                return Err(Error::FitDiverged {
                    iteration: iterations,
                    residual: obj.mean_dist,
                });
            }
        } else {
            increases = 0;
        }
        let rel = (cur.value - obj.value) / cur.value.max(f64::MIN_POSITIVE);
        c = trial;
        cur = obj;
        step *= 1.5;
        if rel < opts.tol {
            break;
        }
    }
    Ok(FitResult {
        tokens: GhdTokens::from_matrix(&c),
        residual: cur.mean_dist,
        iterations,
    })
}

/// Static 3-d tree for nearest-vertex queries. Ties resolve to the lower index.
pub(crate) struct KdTree {
    pts: Vec<Vec3>,
    /// Point indices arranged as an implicit balanced tree.
    idx: Vec<usize>,
    axis: Vec<u8>,
}

impl KdTree {
    pub(crate) fn new(points: &[Vec3]) -> Self {
        let mut idx: Vec<usize> = (0..points.len()).collect();
        let mut axis = vec![0u8; points.len()];
        Self::build(points, &mut idx, &mut axis, 0);
        KdTree {
            pts: points.to_vec(),
            idx,
            axis,
        }
    }

    fn build(pts: &[Vec3], idx: &mut [usize], axis: &mut [u8], _depth: usize) {
        if idx.len() <= 1 {
            return;
        }
        // split on the widest extent
        let mut lo = [f64::INFINITY; 3];
        let mut hi = [f64::NEG_INFINITY; 3];
        for &i in idx.iter() {
            for k in 0..3 {
                lo[k] = lo[k].min(pts[i][k]);
                hi[k] = hi[k].max(pts[i][k]);
            }
        }
        let ax = (0..3).max_by(|&a, &b| (hi[a] - lo[a]).total_cmp(&(hi[b] - lo[b]))).unwrap();
        let mid = idx.len() / 2;
        idx.select_nth_unstable_by(mid, |&a, &b| pts[a][ax].total_cmp(&pts[b][ax]).then(a.cmp(&b)));
        axis[mid] = ax as u8;
        let (l, r) = idx.split_at_mut(mid);
        let (al, ar) = axis.split_at_mut(mid);
        Self::build(pts, l, al, _depth + 1);
        Self::build(pts, &mut r[1..], &mut ar[1..], _depth + 1);
    }

    /// Index of the nearest point and its squared distance.
    pub(crate) fn nearest(&self, q: Vec3) -> (usize, f64) {
        let mut best = (usize::MAX, f64::INFINITY);
        self.search(0, self.idx.len(), q, &mut best);
        best
    }

    fn search(&self, lo: usize, hi: usize, q: Vec3, best: &mut (usize, f64)) {
        if lo >= hi {
            return;
        }
        let mid = lo + (hi - lo) / 2;
        let i = self.idx[mid];
        let p = self.pts[i];
        let d = sub(p, q);
        let d2 = dot(d, d);
        if d2 < best.1 || (d2 == best.1 && i < best.0) {
            *best = (i, d2);
        }
        if hi - lo == 1 {
            return;
        }
        let ax = self.axis[mid] as usize;
        let delta = q[ax] - p[ax];
        let (near, far) = if delta < 0.0 {
            ((lo, mid), (mid + 1, hi))
        } else {
            ((mid + 1, hi), (lo, mid))
        };
        self.search(near.0, near.1, q, best);
        if delta * delta <= best.1 {
            self.search(far.0, far.1, q, best);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::primitives;
    use crate::spectral::compute_basis;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_tokens(n: usize, seed: u64) -> GhdTokens {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        GhdTokens::new((0..n).map(|_| [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)]).collect())
    }

    #[test]
    fn zero_and_doubled_tokens() {
        let b = compute_basis(&primitives::icosphere(1), 10).unwrap();
        let z = reconstruct(&b, &GhdTokens::zeros(10)).unwrap();
        assert!(z.vertices().iter().all(|v| *v == [0.0; 3]));
        let t = random_tokens(10, 1);
        let m1 = reconstruct(&b, &t).unwrap();
        let t2 = GhdTokens::new(t.coeffs().iter().map(|c| [2.0 * c[0], 2.0 * c[1], 2.0 * c[2]]).collect());
        let m2 = reconstruct(&b, &t2).unwrap();
        for (a, c) in m1.vertices().iter().zip(m2.vertices()) {
            for k in 0..3 {
                assert!((2.0 * a[k] - c[k]).abs() < 1e-12);
            }
        }
        assert_eq!(m1.faces(), b.canonical().faces());
    }

    #[test]
    fn token_count_mismatch() {
        let b = compute_basis(&primitives::icosphere(1), 4).unwrap();
        assert!(reconstruct(&b, &GhdTokens::zeros(5)).is_err());
    }

    #[test]
    fn full_rank_canonical_roundtrip() {
        let mesh = primitives::icosphere(1);
        let b = compute_basis(&mesh, mesh.num_vertices()).unwrap();
        let fit = fit_tokens(&b, &mesh, &FitOptions::default()).unwrap();
        let back = reconstruct(&b, &fit.tokens).unwrap();
        for (a, c) in mesh.vertices().iter().zip(back.vertices()) {
            assert!(crate::mesh::vec3::dist(*a, *c) <= 1e-6);
        }
    }

    #[test]
    fn nested_truncation_residuals() {
        let mesh = primitives::icosphere(2);
        let scaled = mesh.transformed(&[[2.0, 0.0, 0.0], [0.0, 2.0, 0.0], [0.0, 0.0, 2.0]], [0.0; 3]);
        let full = compute_basis(&mesh, 12).unwrap();
        let mut prev = f64::INFINITY;
        for n in 1..=12 {
            let r = fit_tokens(&full.truncated(n).unwrap(), &scaled, &FitOptions::default())
                .unwrap()
                .residual;
            assert!(r <= prev + 1e-12);
            prev = r;
        }
    }

    #[test]
    fn json_shape() {
        let t = random_tokens(3, 2);
        let s = t.to_json().unwrap();
        assert!(s.starts_with("{\"n\":3,\"coeffs\":[["));
        assert_eq!(GhdTokens::from_json(&s).unwrap(), t);
        assert!(GhdTokens::from_json("{\"n\":2,\"coeffs\":[[0,0,0]]}").is_err());
    }

    #[test]
    fn kdtree_matches_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let pts: Vec<Vec3> = (0..300).map(|_| [rng.gen(), rng.gen(), rng.gen()]).collect();
        let tree = KdTree::new(&pts);
        for _ in 0..200 {
            let q: Vec3 = [rng.gen(), rng.gen(), rng.gen()];
            let (i, d2) = tree.nearest(q);
            let brute = pts
                .iter()
                .map(|p| dot(sub(*p, q), sub(*p, q)))
                .fold(f64::INFINITY, f64::min);
            assert_eq!(d2, brute);
            assert_eq!(dot(sub(pts[i], q), sub(pts[i], q)), brute);
        }
    }

    #[test]
    fn descent_fits_other_resolution() {
        let canon = primitives::icosphere(3);
        let b = compute_basis(&canon, 25).unwrap();
        // ellipsoid at a finer resolution; vertex-sampled Chamfer has a floor
        // of roughly half the coarser edge length
        let target = primitives::icosphere(4).transformed(&[[1.3, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 0.8]], [0.0; 3]);
        let opts = FitOptions {
            max_iter: 500,
            ..Default::default()
        };
        let fit = fit_tokens(&b, &target, &opts).unwrap();
        assert!(fit.iterations <= 500);
        assert!(fit.residual < 0.02 * target.bbox_diagonal(), "residual {}", fit.residual);
        let m = reconstruct(&b, &fit.tokens).unwrap();
        for v in m.vertices() {
            let r = ((v[0] / 1.3).powi(2) + v[1].powi(2) + (v[2] / 0.8).powi(2)).sqrt();
            assert!((r - 1.0).abs() < 0.05, "{r}");
        }
    }
}
