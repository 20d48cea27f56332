use super::vec3::{add, cross, dot, norm, scale, sub};
use super::{ScalarField, TriMesh, VectorField};
use crate::error::{Error, Result};

/// Per-face gradient of the piecewise-linear interpolant.
pub fn face_gradients(mesh: &TriMesh, f: &[f64]) -> Result<Vec<[f64; 3]>> {
    let mut out = Vec::with_capacity(mesh.num_faces());
    for (fi, face) in mesh.faces().iter().enumerate() {
        let p = mesh.face_positions(fi);
        let nrm = cross(sub(p[1], p[0]), sub(p[2], p[0]));
        let a2 = norm(nrm);
        if !(a2 > 0.0) {
            return Err(Error::DegenerateFace {
                face: fi,
                reason: "zero area in gradient".into(),
            });
        }
        let nhat = scale(nrm, 1.0 / a2);
        let mut g = [0.0; 3];
        for k in 0..3 {
            // edge opposite vertex k, counter-clockwise
            let e = sub(p[(k + 2) % 3], p[(k + 1) % 3]);
            g = add(g, scale(cross(nhat, e), f[face[k]]));
        }
        out.push(scale(g, 1.0 / a2));
    }
    Ok(out)
}

/// Face gradients averaged to vertices with face-area weights.
pub fn surface_gradient(mesh: &TriMesh, f: &ScalarField) -> Result<VectorField> {
    f.check_on(mesh)?;
    let vals = f.scalars();
    Ok(VectorField::new(gradient_of(mesh, &vals)?))
}

pub(crate) fn gradient_of(mesh: &TriMesh, vals: &[f64]) -> Result<Vec<[f64; 3]>> {
    let fg = face_gradients(mesh, vals)?;
    let n = mesh.num_vertices();
    let mut acc = vec![[0.0; 3]; n];
    let mut w = vec![0.0; n];
    for (fi, face) in mesh.faces().iter().enumerate() {
        let a = mesh.face_area(fi);
        for &v in face {
            acc[v] = add(acc[v], scale(fg[fi], a));
            w[v] += a;
        }
    }
    Ok(acc
        .into_iter()
        .zip(w)
        .map(|(g, wi)| if wi > 0.0 { scale(g, 1.0 / wi) } else { [0.0; 3] })
        .collect())
}

/// Remove the normal component of each vector.
pub fn project_tangent(field: &VectorField, normals: &VectorField) -> VectorField {
    VectorField::new(
        field
            .values
            .iter()
            .zip(&normals.values)
            .map(|(&g, &n)| sub(g, scale(n, dot(g, n))))
            .collect(),
    )
}
