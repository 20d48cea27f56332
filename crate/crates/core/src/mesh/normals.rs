use super::vec3::{add, normalize};
use super::{TriMesh, VectorField};
use crate::error::{Error, Result};

/// Area-weighted average of incident face normals, normalized.
pub fn vertex_normals(mesh: &TriMesh) -> Result<VectorField> {
    let n = mesh.num_vertices();
    let mut acc = vec![[0.0; 3]; n];
    let mut touched = vec![false; n];
    for (fi, f) in mesh.faces().iter().enumerate() {
        // |cross| = 2 * area, so the plain sum is area-weighted
        let c = mesh.face_cross(fi);
        for &v in f {
            acc[v] = add(acc[v], c);
            touched[v] = true;
        }
    }
    let mut out = Vec::with_capacity(n);
    for (v, a) in acc.into_iter().enumerate() {
        if !touched[v] {
            return Err(Error::IsolatedVertex(v));
        }
        out.push(normalize(a).ok_or_else(|| {
            Error::Invalid(format!("vertex {v} has a vanishing normal"))
        })?);
    }
    Ok(VectorField::new(out))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::primitives;
    use crate::mesh::vec3::{dot, sub};

    #[test]
    fn flat_square() {
        let m = primitives::grid(4, 4, 1.0, 1.0);
        let n = vertex_normals(&m).unwrap();
        for v in &n.values {
            assert!((v[2] - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn tetrahedron_points_outward() {
        let m = primitives::tetrahedron();
        let n = vertex_normals(&m).unwrap();
        let c = [0.0; 3];
        for (p, nv) in m.vertices().iter().zip(&n.values) {
            assert!(dot(sub(*p, c), *nv) > 0.0);
        }
    }

    #[test]
    fn sphere_normals_are_radial() {
        let m = primitives::icosphere(3);
        assert_eq!(m.num_vertices(), 642);
        let n = vertex_normals(&m).unwrap();
        let max_angle = m
            .vertices()
            .iter()
            .zip(&n.values)
            .map(|(p, nv)| dot(*p, *nv).clamp(-1.0, 1.0).acos().to_degrees())
            .fold(0.0, f64::max);
        assert!(max_angle < 5.0, "max angular error {max_angle} deg");
    }

    #[test]
    fn isolated_vertex() {
        let m = TriMesh::new(
            vec![[0.0; 3], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [5.0, 5.0, 5.0]],
            vec![[0, 1, 2]],
        )
        .unwrap();
        assert!(matches!(vertex_normals(&m), Err(Error::IsolatedVertex(3))));
    }
}
