use std::f64::consts::TAU;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::encoding::Waveform;
use crate::error::{Error, Result};
use crate::mesh::laplacian::cotangent_laplacian;
use crate::mesh::normals::vertex_normals;
use crate::mesh::vec3::{cross, dot, norm, normalize, scale, sub, Vec3};
use crate::mesh::{TriMesh, VectorField};
use crate::surrogates::WssSeries;

/// Two periodic Gaussian pulses (systole, diastole) over a baseline.
/// Times and widths are fractions of the cycle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct WaveTemplate {
    pub base: f64,
    pub systole_amp: f64,
    pub systole_peak: f64,
    pub systole_width: f64,
    pub diastole_amp: f64,
    pub diastole_peak: f64,
    pub diastole_width: f64,
    pub period: f64,
}

impl Default for WaveTemplate {
    fn default() -> Self {
        WaveTemplate {
            base: 0.3,
            systole_amp: 1.0,
            systole_peak: 0.2,
            systole_width: 0.06,
            diastole_amp: 0.35,
            diastole_peak: 0.5,
            diastole_width: 0.08,
            period: 1.0,
        }
    }
}

fn periodic_gauss(phase: f64, peak: f64, width: f64) -> f64 {
    (-1..=1)
        .map(|k| {
            let d = phase - peak + k as f64;
            (-d * d / (2.0 * width * width)).exp()
        })
        .sum()
}

impl WaveTemplate {
    /// Unnormalized value at cycle phase in `[0, 1)`.
    pub fn value(&self, phase: f64) -> f64 {
        self.base
            + self.systole_amp * periodic_gauss(phase, self.systole_peak, self.systole_width)
            + self.diastole_amp * periodic_gauss(phase, self.diastole_peak, self.diastole_width)
    }

    /// `frames` uniform samples scaled to unit peak.
    pub fn sample(&self, frames: usize) -> Result<Waveform> {
        let raw: Vec<f64> = (0..frames).map(|i| self.value(i as f64 / frames as f64)).collect();
        let peak = raw.iter().cloned().fold(f64::MIN, f64::max);
        Waveform::new(raw.iter().map(|x| x / peak).collect(), self.period)
    }

    /// Jittered peak times and widths.
    pub fn randomized(&self, rng: &mut impl Rng) -> Self {
        WaveTemplate {
            systole_peak: self.systole_peak + rng.gen_range(-0.05..0.05),
            systole_width: self.systole_width * rng.gen_range(0.8..1.25),
            diastole_peak: self.diastole_peak + rng.gen_range(-0.08..0.08),
            diastole_width: self.diastole_width * rng.gen_range(0.8..1.25),
            diastole_amp: self.diastole_amp * rng.gen_range(0.7..1.3),
            ..*self
        }
    }
}

/// Parameters of the analytic pulsatile WSS field.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OracleParams {
    /// Base magnitude in Pa.
    pub tau0: f64,
    /// Curvature gain.
    pub beta: f64,
    /// Weight of the cross-flow term driven by the waveform derivative.
    pub gamma: f64,
    pub profile_seed: u64,
    pub profile_amp: f64,
    pub template: WaveTemplate,
}

impl Default for OracleParams {
    fn default() -> Self {
        OracleParams {
            tau0: 1.5,
            beta: 1.0,
            gamma: 1.5,
            profile_seed: 7,
            profile_amp: 0.15,
            template: WaveTemplate::default(),
        }
    }
}

impl OracleParams {
    pub fn validate(&self) -> Result<()> {
        let finite = [self.tau0, self.beta, self.gamma, self.profile_amp].iter().all(|x| x.is_finite());
        if !finite || self.tau0 <= 0.0 || self.gamma < 0.0 {
            return Err(Error::Invalid("oracle needs finite params, tau0 > 0, gamma >= 0".into()));
        }
        Ok(())
    }

    /// Waveform level used for steady cases: cycle mean of the normalized template.
    pub fn steady_level(&self) -> f64 {
        let w = self.template.sample(4096).expect("template is valid");
        w.mean()
    }
}

/// Exact derivative of the trigonometric interpolant of periodic samples.
pub fn spectral_derivative(samples: &[f64], period: f64) -> Vec<f64> {
    let n = samples.len();
    let mut buf: Vec<Complex<f64>> = samples.iter().map(|&x| Complex::new(x, 0.0)).collect();
    let mut planner = FftPlanner::new();
    planner.plan_fft_forward(n).process(&mut buf);
    for (k, c) in buf.iter_mut().enumerate() {
        let freq = if 2 * k < n {
            k as f64
        } else if 2 * k == n {
            0.0
        } else {
            k as f64 - n as f64
        };
        *c *= Complex::new(0.0, TAU * freq / period);
    }
    planner.plan_fft_inverse(n).process(&mut buf);
    buf.iter().map(|c| c.re / n as f64).collect()
}

/// Mass-normalized `L p . n` per vertex, boundary values borrowed from
/// interior neighbours, one smoothing pass, min-max scaled to `[0, 1]`.
pub fn curvature_proxy(mesh: &TriMesh) -> Result<Vec<f64>> {
    let n = mesh.num_vertices();
    let lap = cotangent_laplacian(mesh)?;
    let normals = vertex_normals(mesh)?;
    let mut area = vec![0.0; n];
    for (f, face) in mesh.faces().iter().enumerate() {
        let a = mesh.face_area(f) / 3.0;
        for &v in face {
            area[v] += a;
        }
    }
    let coords: Vec<Vec<f64>> = (0..3).map(|k| mesh.vertices().iter().map(|p| p[k]).collect()).collect();
    let lp: Vec<Vec<f64>> = coords.iter().map(|c| lap.matvec(c)).collect();
    let bnd = mesh.boundary_flags();
    let mut raw: Vec<f64> = (0..n)
        .map(|v| dot([lp[0][v], lp[1][v], lp[2][v]], normals.values[v]) / area[v])
        .collect();
    let adj = mesh.adjacency();
    for v in 0..n {
        if bnd[v] {
            let inner: Vec<f64> = adj[v].iter().filter(|&&u| !bnd[u]).map(|&u| raw[u]).collect();
            raw[v] = if inner.is_empty() { 0.0 } else { inner.iter().sum::<f64>() / inner.len() as f64 };
        }
    }
    let smooth: Vec<f64> = (0..n)
        .map(|v| (raw[v] + adj[v].iter().map(|&u| raw[u]).sum::<f64>()) / (1 + adj[v].len()) as f64)
        .collect();
    let lo = smooth.iter().cloned().fold(f64::MAX, f64::min);
    let hi = smooth.iter().cloned().fold(f64::MIN, f64::max);
    let span = hi - lo;
    Ok(smooth
        .iter()
        .map(|x| if span > 1e-12 { (x - lo) / span } else { 0.0 })
        .collect())
}

/// Per-vertex `(t, b)`: `t` is the z axis projected onto the tangent plane,
/// `b = n x t`.
pub fn tangent_frame(mesh: &TriMesh) -> Result<(Vec<Vec3>, Vec<Vec3>)> {
    let normals = vertex_normals(mesh)?;
    let mut ts = Vec::with_capacity(mesh.num_vertices());
    let mut bs = Vec::with_capacity(mesh.num_vertices());
    for (v, &nv) in normals.values.iter().enumerate() {
        let project = |a: Vec3| sub(a, scale(nv, dot(a, nv)));
        let pz = project([0.0, 0.0, 1.0]);
        let axis = if norm(pz) > 1e-3 { pz } else { project([1.0, 0.0, 0.0]) };
        let t = normalize(axis).ok_or_else(|| Error::Invalid(format!("no tangent direction at vertex {v}")))?;
        ts.push(t);
        bs.push(cross(nv, t));
    }
    Ok((ts, bs))
}

/// Spatial magnitude `tau(x)` of the oracle.
pub fn oracle_tau(mesh: &TriMesh, params: &OracleParams) -> Result<Vec<f64>> {
    params.validate()?;
    let kappa = curvature_proxy(mesh)?;
    let mut rng = ChaCha8Rng::seed_from_u64(params.profile_seed);
    let dir: Vec3 = normalize([rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)])
        .unwrap_or([0.0, 0.0, 1.0]);
    let phi = rng.gen_range(0.0..TAU);
    Ok(mesh
        .vertices()
        .iter()
        .zip(&kappa)
        .map(|(p, k)| params.tau0 * (1.0 + params.beta * k) * (1.0 + params.profile_amp * (1.2 * dot(dir, *p) + phi).sin()))
        .collect())
}

/// `w(x, t) = tau(x) [ g(t) t(x) + gamma kappa(x) g'(t) b(x) ]` with `g'`
/// the derivative in cycle phase (`period / 2pi * dg/dt`). `waveform` is
/// used as given; callers pass unit-peak samples.
pub fn oracle_wss(mesh: &TriMesh, waveform: &Waveform, params: &OracleParams) -> Result<WssSeries> {
    let tau = oracle_tau(mesh, params)?;
    let kappa = curvature_proxy(mesh)?;
    let (ts, bs) = tangent_frame(mesh)?;
    let g = waveform.samples();
    let dg: Vec<f64> = spectral_derivative(g, waveform.period())
        .into_iter()
        .map(|d| d * waveform.period() / TAU)
        .collect();
    let frames = (0..g.len())
        .map(|i| {
            VectorField::new(
                (0..mesh.num_vertices())
                    .map(|v| {
                        let a = tau[v] * g[i];
                        let b = tau[v] * params.gamma * kappa[v] * dg[i];
                        [0, 1, 2].map(|k| a * ts[v][k] + b * bs[v][k])
                    })
                    .collect(),
            )
        })
        .collect();
    WssSeries::new(frames, waveform.times())
}

/// Steady label: the oracle under a constant waveform at the steady level.
pub fn oracle_steady(mesh: &TriMesh, params: &OracleParams) -> Result<VectorField> {
    let level = params.steady_level();
    let w = Waveform::new(vec![level; 8], params.template.period)?;
    Ok(oracle_wss(mesh, &w, params)?.frame(0).clone())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::shapes::{make_canonical, Resolution};

    #[test]
    fn spectral_derivative_of_sine_is_exact() {
        let n = 32;
        let s: Vec<f64> = (0..n).map(|i| (TAU * 3.0 * i as f64 / n as f64).sin()).collect();
        let d = spectral_derivative(&s, 2.0);
        for (i, x) in d.iter().enumerate() {
            let want = TAU * 3.0 / 2.0 * (TAU * 3.0 * i as f64 / n as f64).cos();
            assert!((x - want).abs() < 1e-10);
        }
        let c = spectral_derivative(&[2.5; 8], 1.0);
        assert!(c.iter().all(|x| x.abs() < 1e-14));
    }

    #[test]
    fn template_sample_has_unit_peak() {
        let w = WaveTemplate::default().sample(64).unwrap();
        let peak = w.samples().iter().cloned().fold(f64::MIN, f64::max);
        assert!((peak - 1.0).abs() < 1e-15);
        assert!(w.samples().iter().all(|&x| x > 0.0));
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let r = WaveTemplate::default().randomized(&mut rng);
        assert_ne!(r, WaveTemplate::default());
    }

    #[test]
    fn curvature_is_highest_on_the_dome() {
        let m = make_canonical(Resolution::Coarse);
        let k = curvature_proxy(&m).unwrap();
        assert!(k.iter().all(|x| (0.0..=1.0).contains(x)));
        // vertex furthest along +x sits on the dome
        let top = (0..m.num_vertices())
            .max_by(|&a, &b| m.vertices()[a][0].total_cmp(&m.vertices()[b][0]))
            .unwrap();
        let mean = k.iter().sum::<f64>() / k.len() as f64;
        assert!(k[top] > mean);
    }

    #[test]
    fn frame_is_orthonormal_and_tangent() {
        let m = make_canonical(Resolution::Coarse);
        let (ts, bs) = tangent_frame(&m).unwrap();
        let n = vertex_normals(&m).unwrap();
        for v in 0..m.num_vertices() {
            assert!(dot(ts[v], n.values[v]).abs() < 1e-12);
            assert!(dot(bs[v], ts[v]).abs() < 1e-12);
            assert!((dot(ts[v], ts[v]) - 1.0).abs() < 1e-12);
            assert!((dot(bs[v], bs[v]) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_gamma_keeps_direction_fixed() {
        let m = make_canonical(Resolution::Coarse);
        let p = OracleParams {
            gamma: 0.0,
            ..Default::default()
        };
        let s = oracle_wss(&m, &p.template.sample(32).unwrap(), &p).unwrap();
        for v in 0..m.num_vertices() {
            let d0 = normalize(s.frame(0).values[v]).unwrap();
            for t in 1..32 {
                let d = normalize(s.frame(t).values[v]).unwrap();
                assert!(dot(d, d0) > 1.0 - 1e-12);
            }
        }
    }

    #[test]
    fn constant_waveform_matches_steady_label() {
        let m = make_canonical(Resolution::Coarse);
        let p = OracleParams::default();
        let steady = oracle_steady(&m, &p).unwrap();
        let w = Waveform::new(vec![p.steady_level(); 64], 1.0).unwrap();
        let s = oracle_wss(&m, &w, &p).unwrap();
        for t in [0, 17, 63] {
            for (a, b) in s.frame(t).values.iter().zip(&steady.values) {
                for k in 0..3 {
                    assert!((a[k] - b[k]).abs() < 1e-9);
                }
            }
        }
    }

    #[test]
    fn rejects_bad_params() {
        let m = make_canonical(Resolution::Coarse);
        let p = OracleParams {
            tau0: -1.0,
            ..Default::default()
        };
        assert!(oracle_tau(&m, &p).is_err());
    }
}
