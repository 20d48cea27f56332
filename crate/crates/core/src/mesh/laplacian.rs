//! Cotangent Laplacian (positive semi-definite convention, no mass matrix).

use super::vec3::{cross, dot, norm, sub};
use super::TriMesh;
use crate::error::{Error, Result};
use crate::linalg::CsrMatrix;

/// Symmetric sparse matrix stored with both triangles present.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseSymMatrix {
    csr: CsrMatrix,
}

impl SparseSymMatrix {
    /// Wrap a CSR matrix, checking symmetry to 1e-12 relative.
    pub fn new(csr: CsrMatrix) -> Result<Self> {
        if csr.rows() != csr.cols() {
            return Err(Error::Shape("symmetric matrix must be square".into()));
        }
        let scale = (0..csr.rows())
            .flat_map(|r| csr.row(r).map(|(_, v)| v.abs()))
            .fold(0.0, f64::max)
            .max(f64::MIN_POSITIVE);
        for (r, c, v) in csr.triplets() {
            if (v - csr.get(c, r)).abs() > 1e-12 * scale {
                return Err(Error::Invalid(format!("matrix not symmetric at ({r}, {c})")));
            }
        }
        Ok(SparseSymMatrix { csr })
    }

    pub fn dimension(&self) -> usize {
        self.csr.rows()
    }

    pub fn csr(&self) -> &CsrMatrix {
        &self.csr
    }

    pub fn entries(&self) -> Vec<(usize, usize, f64)> {
        self.csr.triplets()
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.csr.get(r, c)
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        self.csr.matvec(x)
    }

    pub fn quadratic_form(&self, x: &[f64]) -> f64 {
        self.matvec(x).iter().zip(x).map(|(a, b)| a * b).sum()
    }

    pub fn row_sums(&self) -> Vec<f64> {
        (0..self.dimension())
            .map(|r| self.csr.row(r).map(|(_, v)| v).sum())
            .collect()
    }
}

/// Cotangent of the angle at `o` in triangle `(o, a, b)`.
fn cot_at(o: [f64; 3], a: [f64; 3], b: [f64; 3]) -> f64 {
    let u = sub(a, o);
    let v = sub(b, o);
    dot(u, v) / norm(cross(u, v))
}

/// `L[i,j] = -(cot a_ij + cot b_ij) / 2` off the diagonal, diagonal equal to
/// minus the off-diagonal row sum.
pub fn cotangent_laplacian(mesh: &TriMesh) -> Result<SparseSymMatrix> {
    let n = mesh.num_vertices();
    let mut trip = Vec::with_capacity(mesh.num_faces() * 12);
    let scale = mesh.bbox_diagonal().max(f64::MIN_POSITIVE);
    for (fi, f) in mesh.faces().iter().enumerate() {
        let p = mesh.face_positions(fi);
        let area2 = norm(cross(sub(p[1], p[0]), sub(p[2], p[0])));
        if !(area2 > 1e-14 * scale * scale) {
            return Err(Error::DegenerateFace {
                face: fi,
                reason: "zero area, cotangent undefined".into(),
            });
        }
        for k in 0..3 {
            let (i, j) = (f[(k + 1) % 3], f[(k + 2) % 3]);
            let w = 0.5 * cot_at(p[k], p[(k + 1) % 3], p[(k + 2) % 3]);
            trip.push((i, j, -w));
            trip.push((j, i, -w));
            trip.push((i, i, w));
            trip.push((j, j, w));
        }
    }
    SparseSymMatrix::new(CsrMatrix::from_triplets(n, n, &trip))
}
