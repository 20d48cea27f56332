//! Triangle surface meshes and the discrete operators defined on them.
//!
//! A [`TriMesh`] is an indexed triangle list plus per-vertex boundary
//! flags. Construction validates indices and edge-manifoldness; geometry
//! (degenerate areas) is checked by the operators that need it and by the
//! OBJ loader.

pub mod geodesic;
pub mod gradient;
pub mod knn;
pub mod laplacian;
pub mod normals;
pub mod obj;
pub mod primitives;
pub mod vec3;

use std::collections::HashMap;

use crate::error::{Error, Result};
pub use gradient::surface_gradient;
pub use knn::knn_graph;
pub use laplacian::{cotangent_laplacian, SparseSymMatrix};
pub use normals::vertex_normals;
pub use obj::{load_mesh, save_mesh};
use vec3::Vec3;

/// Indexed triangle surface mesh.
#[derive(Debug, Clone, PartialEq)]
pub struct TriMesh {
    vertices: Vec<Vec3>,
    faces: Vec<[usize; 3]>,
    boundary: Vec<bool>,
}

impl TriMesh {
    /// Build a mesh, validating indices and edge-manifoldness.
    pub fn new(vertices: Vec<Vec3>, faces: Vec<[usize; 3]>) -> Result<Self> {
        if vertices.is_empty() || faces.is_empty() {
            return Err(Error::EmptyMesh);
        }
        let n = vertices.len();
        for (fi, f) in faces.iter().enumerate() {
            for &v in f {
                if v >= n {
                    return Err(Error::DegenerateFace {
                        face: fi,
                        reason: format!("vertex index {v} >= vertex count {n}"),
                    });
                }
            }
            if f[0] == f[1] || f[1] == f[2] || f[0] == f[2] {
                return Err(Error::DegenerateFace {
                    face: fi,
                    reason: format!("repeated vertex index {f:?}"),
                });
            }
        }
        let counts = edge_face_counts(&faces);
        let mut sorted: Vec<_> = counts.iter().collect();
        sorted.sort_unstable();
        for (id, (&(a, b), &c)) in sorted.iter().enumerate() {
            if c > 2 {
                return Err(Error::NonManifoldEdge {
                    edge: id,
                    a,
                    b,
                    faces: c,
                });
            }
        }
        let mut boundary = vec![false; n];
        for (&(a, b), &c) in &counts {
            if c == 1 {
                boundary[a] = true;
                boundary[b] = true;
            }
        }
        Ok(TriMesh {
            vertices,
            faces,
            boundary,
        })
    }

    /// Same connectivity, new positions.
    pub fn with_vertices(&self, vertices: Vec<Vec3>) -> Result<Self> {
        if vertices.len() != self.vertices.len() {
            return Err(Error::Shape(format!(
                "expected {} vertices, got {}",
                self.vertices.len(),
                vertices.len()
            )));
        }
        Ok(TriMesh {
            vertices,
            faces: self.faces.clone(),
            boundary: self.boundary.clone(),
        })
    }

    pub fn vertices(&self) -> &[Vec3] {
        &self.vertices
    }

    pub fn faces(&self) -> &[[usize; 3]] {
        &self.faces
    }

    pub fn boundary_flags(&self) -> &[bool] {
        &self.boundary
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn num_faces(&self) -> usize {
        self.faces.len()
    }

    pub fn face_positions(&self, f: usize) -> [Vec3; 3] {
        let [a, b, c] = self.faces[f];
        [self.vertices[a], self.vertices[b], self.vertices[c]]
    }

    /// Unnormalized face normal; its length is twice the face area.
    pub fn face_cross(&self, f: usize) -> Vec3 {
        let [p0, p1, p2] = self.face_positions(f);
        vec3::cross(vec3::sub(p1, p0), vec3::sub(p2, p0))
    }

    pub fn face_area(&self, f: usize) -> f64 {
        0.5 * vec3::norm(self.face_cross(f))
    }

    /// Sorted unique undirected edges `(a, b)` with `a < b`.
    pub fn edges(&self) -> Vec<[usize; 2]> {
        let mut e: Vec<[usize; 2]> = edge_face_counts(&self.faces)
            .into_keys()
            .map(|(a, b)| [a, b])
            .collect();
        e.sort_unstable();
        e
    }

    /// Vertex adjacency lists (sorted).
    pub fn adjacency(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.num_vertices()];
        for [a, b] in self.edges() {
            adj[a].push(b);
            adj[b].push(a);
        }
        for a in &mut adj {
            a.sort_unstable();
        }
        adj
    }

    pub fn euler_characteristic(&self) -> i64 {
        self.num_vertices() as i64 - self.edges().len() as i64 + self.num_faces() as i64
    }

    /// Open boundary loops as ordered vertex cycles.
    pub fn boundary_loops(&self) -> Vec<Vec<usize>> {
        boundary_loops(&self.faces)
    }

    /// Axis-aligned bounding box `(min, max)`.
    pub fn bounding_box(&self) -> (Vec3, Vec3) {
        let mut lo = [f64::INFINITY; 3];
        let mut hi = [f64::NEG_INFINITY; 3];
        for v in &self.vertices {
            for k in 0..3 {
                lo[k] = lo[k].min(v[k]);
                hi[k] = hi[k].max(v[k]);
            }
        }
        (lo, hi)
    }

    pub fn bbox_diagonal(&self) -> f64 {
        let (lo, hi) = self.bounding_box();
        vec3::dist(lo, hi)
    }

    /// Apply `x -> R x + t` to every vertex.
    pub fn transformed(&self, rot: &[[f64; 3]; 3], shift: Vec3) -> TriMesh {
        let vertices = self
            .vertices
            .iter()
            .map(|&v| vec3::add(vec3::mat_vec(rot, v), shift))
            .collect();
        TriMesh {
            vertices,
            faces: self.faces.clone(),
            boundary: self.boundary.clone(),
        }
    }

    /// Relabel vertices: new index of old vertex `i` is `perm[i]`.
    pub fn permuted(&self, perm: &[usize]) -> Result<TriMesh> {
        let n = self.num_vertices();
        if perm.len() != n {
            return Err(Error::Shape("permutation length".into()));
        }
        let mut seen = vec![false; n];
        for &p in perm {
            if p >= n || std::mem::replace(&mut seen[p], true) {
                return Err(Error::Invalid("not a permutation".into()));
            }
        }
        let mut vertices = vec![[0.0; 3]; n];
        for (old, &new) in perm.iter().enumerate() {
            vertices[new] = self.vertices[old];
        }
        let faces = self
            .faces
            .iter()
            .map(|f| [perm[f[0]], perm[f[1]], perm[f[2]]])
            .collect();
        TriMesh::new(vertices, faces)
    }

    /// Minimum face area, and the face attaining it.
    pub fn min_face_area(&self) -> (usize, f64) {
        (0..self.num_faces())
            .map(|f| (f, self.face_area(f)))
            .fold((0, f64::INFINITY), |acc, x| if x.1 < acc.1 { x } else { acc })
    }
}

pub(crate) fn edge_face_counts(faces: &[[usize; 3]]) -> HashMap<(usize, usize), usize> {
    let mut counts = HashMap::with_capacity(faces.len() * 2);
    for f in faces {
        for k in 0..3 {
            let (a, b) = (f[k], f[(k + 1) % 3]);
            *counts.entry((a.min(b), a.max(b))).or_insert(0) += 1;
        }
    }
    counts
}

pub(crate) fn boundary_loops(faces: &[[usize; 3]]) -> Vec<Vec<usize>> {
    let counts = edge_face_counts(faces);
    // directed boundary half-edges keep the face orientation
    let mut next: HashMap<usize, Vec<usize>> = HashMap::new();
    for f in faces {
        for k in 0..3 {
            let (a, b) = (f[k], f[(k + 1) % 3]);
            if counts[&(a.min(b), a.max(b))] == 1 {
                next.entry(a).or_default().push(b);
            }
        }
    }
    let mut starts: Vec<usize> = next.keys().copied().collect();
    starts.sort_unstable();
    let mut used: HashMap<(usize, usize), bool> = HashMap::new();
    let mut loops = Vec::new();
    for s in starts {
        for &first in &next[&s].clone() {
            if used.contains_key(&(s, first)) {
                continue;
            }
            let mut lp = vec![s];
            used.insert((s, first), true);
            let mut cur = first;
            let mut guard = 0;
            while cur != s && guard <= counts.len() {
                lp.push(cur);
                let cand = next.get(&cur).and_then(|nx| {
                    nx.iter()
                        .copied()
                        .find(|&x| !used.contains_key(&(cur, x)))
                });
                match cand {
                    Some(nx) => {
                        used.insert((cur, nx), true);
                        cur = nx;
                    }
                    None => break,
                }
                guard += 1;
            }
            loops.push(lp);
        }
    }
    loops
}

/// Per-vertex values of arity `D` on a mesh.
#[derive(Debug, Clone, PartialEq)]
pub struct SurfaceField<const D: usize> {
    pub values: Vec<[f64; D]>,
}

pub type ScalarField = SurfaceField<1>;
pub type VectorField = SurfaceField<3>;

impl<const D: usize> SurfaceField<D> {
    pub fn new(values: Vec<[f64; D]>) -> Self {
        SurfaceField { values }
    }

    pub fn zeros(n: usize) -> Self {
        SurfaceField {
            values: vec![[0.0; D]; n],
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Check that the field lives on `mesh`.
    pub fn check_on(&self, mesh: &TriMesh) -> Result<()> {
        if self.len() != mesh.num_vertices() {
            return Err(Error::Shape(format!(
                "field has {} entries, mesh has {} vertices",
                self.len(),
                mesh.num_vertices()
            )));
        }
        Ok(())
    }

    /// Flattened row-major copy.
    pub fn flat(&self) -> Vec<f64> {
        self.values.iter().flat_map(|v| v.iter().copied()).collect()
    }

    pub fn from_flat(data: &[f64]) -> Result<Self> {
        if data.len() % D != 0 {
            return Err(Error::Shape(format!("{} not divisible by {D}", data.len())));
        }
        Ok(SurfaceField {
            values: data
                .chunks_exact(D)
                .map(|c| {
                    let mut a = [0.0; D];
                    a.copy_from_slice(c);
                    a
                })
                .collect(),
        })
    }

    pub fn l2_norm(&self) -> f64 {
        self.values
            .iter()
            .flat_map(|v| v.iter())
            .map(|x| x * x)
            .sum::<f64>()
            .sqrt()
    }
}

impl ScalarField {
    pub fn from_scalars(v: &[f64]) -> Self {
        SurfaceField {
            values: v.iter().map(|&x| [x]).collect(),
        }
    }

    pub fn scalars(&self) -> Vec<f64> {
        self.values.iter().map(|v| v[0]).collect()
    }
}

impl VectorField {
    pub fn magnitudes(&self) -> Vec<f64> {
        self.values.iter().map(|&v| vec3::norm(v)).collect()
    }
}
