use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::autograd::Tensor;
use crate::error::{Error, Result};
use crate::linalg::{smallest_eigenpairs, EigenOptions};
use crate::mesh::gradient::gradient_of;
use crate::mesh::vec3::{norm, sub, Vec3};
use crate::mesh::{cotangent_laplacian, vertex_normals, TriMesh};
use crate::spectral::GhdBasis;

/// Canonical-basis modes kept per node.
pub const I_TRUNC: usize = 8;
/// Case-mesh eigenpairs kept per node.
pub const J_TRUNC: usize = 16;
pub const PE_WIDTH: usize = I_TRUNC + J_TRUNC + 3 * (I_TRUNC + J_TRUNC);
pub const SE_WIDTH: usize = I_TRUNC + J_TRUNC;
pub const OTHER_WIDTH: usize = 8;
pub const EDGE_WIDTH: usize = 4;

/// Low eigenpairs of a case mesh's own cotangent Laplacian.
#[derive(Debug, Clone)]
pub struct CaseEigs {
    pub values: Vec<f64>,
    pub vectors: DMatrix<f64>,
}

pub fn case_eigs(mesh: &TriMesh) -> Result<CaseEigs> {
    if mesh.num_vertices() < J_TRUNC {
        return Err(Error::Invalid(format!(
            "mesh has {} vertices, need at least {J_TRUNC}",
            mesh.num_vertices()
        )));
    }
    let lap = cotangent_laplacian(mesh)?;
    let e = smallest_eigenpairs(lap.csr(), J_TRUNC, &EigenOptions::default())?;
    Ok(CaseEigs {
        values: e.values,
        vectors: e.vectors,
    })
}

/// Dataset-wide per-axis coordinate statistics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoordStats {
    pub mean: Vec3,
    pub std: Vec3,
}

impl Default for CoordStats {
    fn default() -> Self {
        CoordStats {
            mean: [0.0; 3],
            std: [1.0; 3],
        }
    }
}

impl CoordStats {
    pub fn from_meshes<'a>(meshes: impl IntoIterator<Item = &'a TriMesh>) -> Self {
        let mut n = 0.0;
        let mut s = [0.0; 3];
        let mut s2 = [0.0; 3];
        for m in meshes {
            for v in m.vertices() {
                for k in 0..3 {
                    s[k] += v[k];
                    s2[k] += v[k] * v[k];
                }
                n += 1.0;
            }
        }
        if n == 0.0 {
            return Self::default();
        }
        let mean = s.map(|x| x / n);
        let mut std = [1.0; 3];
        for k in 0..3 {
            let var = s2[k] / n - mean[k] * mean[k];
            std[k] = if var > 1e-24 { var.sqrt() } else { 1.0 };
        }
        CoordStats { mean, std }
    }

    pub fn apply(&self, p: Vec3) -> Vec3 {
        [0, 1, 2].map(|k| (p[k] - self.mean[k]) / self.std[k])
    }
}

/// Per-node and per-edge input features of one shape.
#[derive(Debug, Clone)]
pub struct EncodingBundle {
    /// `N x 96`: u_i, phi_j, grad u_i, grad phi_j.
    pub node_pe: Tensor,
    /// `N x 24`: lambda_i, mu_j broadcast to every node.
    pub node_se: Tensor,
    /// `N x 8`: boundary one-hot, normalized coordinates, normals.
    pub node_other: Tensor,
    /// Directed edges `[src, dst]`, both orientations of each mesh edge.
    pub edges: Vec<[usize; 2]>,
    /// `E x 4`: relative position of src w.r.t. dst (normalized), its length.
    pub edge_feat: Tensor,
}

impl EncodingBundle {
    pub fn num_nodes(&self) -> usize {
        self.node_pe.rows()
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }
}

fn column(m: &DMatrix<f64>, j: usize) -> &[f64] {
    let n = m.nrows();
    &m.as_slice()[j * n..(j + 1) * n]
}

pub fn encode_geometry(mesh: &TriMesh, basis: &GhdBasis, eigs: &CaseEigs, stats: &CoordStats) -> Result<EncodingBundle> {
    if basis.mode_count() < I_TRUNC {
        return Err(Error::Invalid(format!(
            "basis has {} modes, need {I_TRUNC}",
            basis.mode_count()
        )));
    }
    if eigs.values.len() < J_TRUNC {
        return Err(Error::Invalid(format!(
            "case has {} eigenpairs, need {J_TRUNC}",
            eigs.values.len()
        )));
    }
    let n = mesh.num_vertices();
    if basis.num_vertices() != n || eigs.vectors.nrows() != n {
        return Err(Error::Shape("mesh, basis and case eigenvectors disagree on N".into()));
    }
    let mut pe = Tensor::zeros(n, PE_WIDTH);
    let grads_u: Vec<Vec<Vec3>> = (0..I_TRUNC)
        .map(|i| gradient_of(mesh, basis.mode(i)))
        .collect::<Result<_>>()?;
    let grads_phi: Vec<Vec<Vec3>> = (0..J_TRUNC)
        .map(|j| gradient_of(mesh, column(&eigs.vectors, j)))
        .collect::<Result<_>>()?;
    for v in 0..n {
        let row = pe.row_mut(v);
        for i in 0..I_TRUNC {
            row[i] = basis.mode(i)[v];
        }
        for j in 0..J_TRUNC {
            row[I_TRUNC + j] = eigs.vectors[(v, j)];
        }
        let base = I_TRUNC + J_TRUNC;
        for (i, g) in grads_u.iter().chain(&grads_phi).enumerate() {
            row[base + 3 * i..base + 3 * i + 3].copy_from_slice(&g[v]);
        }
    }
    let se_row: Vec<f64> = basis.eigenvalues()[..I_TRUNC]
        .iter()
        .chain(&eigs.values[..J_TRUNC])
        .copied()
        .collect();
    let se = Tensor::from_fn(n, SE_WIDTH, |_, c| se_row[c]);

    let normals = vertex_normals(mesh)?;
    let coords: Vec<Vec3> = mesh.vertices().iter().map(|&p| stats.apply(p)).collect();
    let mut other = Tensor::zeros(n, OTHER_WIDTH);
    for v in 0..n {
        let row = other.row_mut(v);
        if mesh.boundary_flags()[v] {
            row[1] = 1.0;
        } else {
            row[0] = 1.0;
        }
        row[2..5].copy_from_slice(&coords[v]);
        row[5..8].copy_from_slice(&normals.values[v]);
    }

    let mut edges = Vec::new();
    for [a, b] in mesh.edges() {
        edges.push([a, b]);
        edges.push([b, a]);
    }
    edges.sort_unstable_by_key(|&[s, d]| (d, s));
    let mut ef = Tensor::zeros(edges.len(), EDGE_WIDTH);
    for (e, &[s, d]) in edges.iter().enumerate() {
        let rel = sub(coords[s], coords[d]);
        let row = ef.row_mut(e);
        row[..3].copy_from_slice(&rel);
        row[3] = norm(rel);
    }
    Ok(EncodingBundle {
        node_pe: pe,
        node_se: se,
        node_other: other,
        edges,
        edge_feat: ef,
    })
}
