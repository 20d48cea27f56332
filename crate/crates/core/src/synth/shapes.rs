use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mesh::primitives::tube;
use crate::mesh::vec3::{dot, norm, sub};
use crate::mesh::TriMesh;
use crate::spectral::{fit_tokens, reconstruct, FitOptions, GhdBasis, GhdTokens};

const LENGTH: f64 = 4.5;
const DOME_HEIGHT: f64 = 0.6;
const DOME_WIDTH: f64 = 0.6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Resolution {
    Coarse,
    Medium,
    Fine,
}

impl Resolution {
    fn grid(self) -> (usize, usize) {
        match self {
            Resolution::Coarse => (20, 15),
            Resolution::Medium => (40, 30),
            Resolution::Fine => (82, 60),
        }
    }
}

impl std::str::FromStr for Resolution {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "coarse" => Ok(Resolution::Coarse),
            "medium" => Ok(Resolution::Medium),
            "fine" => Ok(Resolution::Fine),
            _ => Err(Error::Invalid(format!("unknown resolution '{s}'"))),
        }
    }
}

/// Unit-radius tube along z with a dome bulging out towards +x at mid-length.
pub fn make_canonical(resolution: Resolution) -> TriMesh {
    let (nt, nz) = resolution.grid();
    tube(nt, nz, LENGTH, |th, z| {
        let dth = th.sin().atan2(th.cos());
        let dz = z - 0.5 * LENGTH;
        1.0 + DOME_HEIGHT * (-(dz * dz + dth * dth) / (2.0 * DOME_WIDTH * DOME_WIDTH)).exp()
    })
}

/// Per-mode perturbation standard deviation `scale * sqrt(N) / (1 + lambda_i / lambda_1)`
/// over modes `1..modes`; the kernel mode is left alone.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AmplitudeSchedule {
    pub scale: f64,
    pub modes: usize,
}

impl Default for AmplitudeSchedule {
    fn default() -> Self {
        AmplitudeSchedule { scale: 0.05, modes: 24 }
    }
}

impl AmplitudeSchedule {
    pub fn stds(&self, basis: &GhdBasis) -> Vec<f64> {
        let lam = basis.eigenvalues();
        let l1 = lam.get(1).copied().unwrap_or(1.0).max(1e-12);
        let sn = (basis.num_vertices() as f64).sqrt();
        (0..basis.mode_count())
            .map(|i| {
                if i == 0 || i >= self.modes {
                    0.0
                } else {
                    self.scale * sn / (1.0 + lam[i] / l1)
                }
            })
            .collect()
    }
}

const MAX_TRIES: usize = 20;

/// Canonical tokens of the basis' own mesh.
pub fn canonical_tokens(basis: &GhdBasis) -> Result<GhdTokens> {
    Ok(fit_tokens(basis, basis.canonical(), &FitOptions::default())?.tokens)
}

/// True when no face of `mesh` is flipped relative to `reference` and no
/// sampled pair of far-apart vertices has come close.
pub fn passes_shape_audit(reference: &TriMesh, mesh: &TriMesh) -> bool {
    for f in 0..mesh.num_faces() {
        if dot(mesh.face_cross(f), reference.face_cross(f)) <= 0.0 {
            return false;
        }
    }
    let n = mesh.num_vertices();
    let step = (n / 97).max(1);
    let rv = reference.vertices();
    let mv = mesh.vertices();
    for a in (0..n).step_by(step) {
        for b in (a % 7..n).step_by(step * 3 + 1) {
            let d0 = norm(sub(rv[a], rv[b]));
            if d0 > 1.0 && norm(sub(mv[a], mv[b])) < 0.25 * d0 {
                return false;
            }
        }
    }
    true
}

/// Random GHD shape around the canonical one.
pub fn sample_shape(basis: &GhdBasis, seed: u64, schedule: &AmplitudeSchedule) -> Result<GhdTokens> {
    let base = canonical_tokens(basis)?;
    let stds = schedule.stds(basis);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..MAX_TRIES {
        let mut t = base.clone();
        for (c, &s) in t.coeffs_mut().iter_mut().zip(&stds) {
            for x in c.iter_mut() {
                let z: f64 = StandardNormal.sample(&mut rng);
                *x += s * z;
            }
        }
        let mesh = reconstruct(basis, &t)?;
        if passes_shape_audit(basis.canonical(), &mesh) {
            return Ok(t);
        }
    }
    Err(Error::RejectionCap(MAX_TRIES))
}
