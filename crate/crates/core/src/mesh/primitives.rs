//! Procedural test meshes.

use std::collections::HashMap;

use super::vec3::{self, Vec3};
use super::TriMesh;

/// Regular tetrahedron with unit edge length, outward orientation.
pub fn tetrahedron() -> TriMesh {
    let s = 1.0 / (2.0 * 2f64.sqrt());
    let v = vec![[s, s, s], [s, -s, -s], [-s, s, -s], [-s, -s, s]];
    let f = vec![[0, 1, 2], [0, 3, 1], [0, 2, 3], [1, 3, 2]];
    TriMesh::new(v, f).expect("tetrahedron is valid")
}

/// Unit icosphere with `subdivisions` rounds of 4:1 splitting
/// (12, 42, 162, 642, 2562, ... vertices).
pub fn icosphere(subdivisions: usize) -> TriMesh {
    let t = (1.0 + 5f64.sqrt()) / 2.0;
    let mut verts: Vec<Vec3> = [
        [-1.0, t, 0.0],
        [1.0, t, 0.0],
        [-1.0, -t, 0.0],
        [1.0, -t, 0.0],
        [0.0, -1.0, t],
        [0.0, 1.0, t],
        [0.0, -1.0, -t],
        [0.0, 1.0, -t],
        [t, 0.0, -1.0],
        [t, 0.0, 1.0],
        [-t, 0.0, -1.0],
        [-t, 0.0, 1.0],
    ]
    .iter()
    .map(|&v| vec3::normalize(v).unwrap())
    .collect();
    let mut faces: Vec<[usize; 3]> = vec![
        [0, 11, 5],
        [0, 5, 1],
        [0, 1, 7],
        [0, 7, 10],
        [0, 10, 11],
        [1, 5, 9],
        [5, 11, 4],
        [11, 10, 2],
        [10, 7, 6],
        [7, 1, 8],
        [3, 9, 4],
        [3, 4, 2],
        [3, 2, 6],
        [3, 6, 8],
        [3, 8, 9],
        [4, 9, 5],
        [2, 4, 11],
        [6, 2, 10],
        [8, 6, 7],
        [9, 8, 1],
    ];
    for _ in 0..subdivisions {
        let mut mid: HashMap<(usize, usize), usize> = HashMap::new();
        let mut midpoint = |a: usize, b: usize, verts: &mut Vec<Vec3>| -> usize {
            let key = (a.min(b), a.max(b));
            *mid.entry(key).or_insert_with(|| {
                let m = vec3::scale(vec3::add(verts[a], verts[b]), 0.5);
                verts.push(vec3::normalize(m).unwrap());
                verts.len() - 1
            })
        };
        let mut next = Vec::with_capacity(faces.len() * 4);
        for &[a, b, c] in &faces {
            let ab = midpoint(a, b, &mut verts);
            let bc = midpoint(b, c, &mut verts);
            let ca = midpoint(c, a, &mut verts);
            next.extend_from_slice(&[[a, ab, ca], [b, bc, ab], [c, ca, bc], [ab, bc, ca]]);
        }
        faces = next;
    }
    TriMesh::new(verts, faces).expect("icosphere is valid")
}

/// Flat `nx` x `ny` vertex grid on `[0, sx] x [0, sy]` in the z = 0 plane,
/// counter-clockwise (normals +z).
pub fn grid(nx: usize, ny: usize, sx: f64, sy: f64) -> TriMesh {
    let mut v = Vec::with_capacity(nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            v.push([
                sx * i as f64 / (nx - 1) as f64,
                sy * j as f64 / (ny - 1) as f64,
                0.0,
            ]);
        }
    }
    let mut f = Vec::new();
    for j in 0..ny - 1 {
        for i in 0..nx - 1 {
            let a = j * nx + i;
            let b = a + 1;
            let c = a + nx;
            let d = c + 1;
            if (i + j) % 2 == 0 {
                f.push([a, b, d]);
                f.push([a, d, c]);
            } else {
                f.push([a, b, c]);
                f.push([b, d, c]);
            }
        }
    }
    TriMesh::new(v, f).expect("grid is valid")
}

/// Open cylinder along z with `n_theta` vertices per ring and `n_z` rings,
/// outward normals.
pub fn open_cylinder(n_theta: usize, n_z: usize, radius: f64, length: f64) -> TriMesh {
    tube(n_theta, n_z, length, |_, _| radius)
}

/// Open tube along z whose radius is a function of `(theta, z)`.
pub fn tube(
    n_theta: usize,
    n_z: usize,
    length: f64,
    radius: impl Fn(f64, f64) -> f64,
) -> TriMesh {
    let mut v = Vec::with_capacity(n_theta * n_z);
    for j in 0..n_z {
        let z = length * j as f64 / (n_z - 1) as f64;
        // staggered rings improve triangle quality
        let off = if j % 2 == 1 { 0.5 } else { 0.0 };
        for i in 0..n_theta {
            let th = 2.0 * std::f64::consts::PI * (i as f64 + off) / n_theta as f64;
            let r = radius(th, z);
            v.push([r * th.cos(), r * th.sin(), z]);
        }
    }
    let mut f = Vec::new();
    for j in 0..n_z - 1 {
        for i in 0..n_theta {
            let i1 = (i + 1) % n_theta;
            let a = j * n_theta + i;
            let b = j * n_theta + i1;
            let c = (j + 1) * n_theta + i;
            let d = (j + 1) * n_theta + i1;
            if j % 2 == 0 {
                f.push([a, b, c]);
                f.push([b, d, c]);
            } else {
                f.push([a, d, c]);
                f.push([a, b, d]);
            }
        }
    }
    TriMesh::new(v, f).expect("tube is valid")
}

/// A sheet folded back on itself: two flat layers `gap` apart joined by a
/// half-cylinder bend. Points on opposite layers are Euclidean-close but
/// far apart along the surface.
pub fn folded_sheet(n_along: usize, n_across: usize, length: f64, gap: f64) -> TriMesh {
    let r = gap / 2.0;
    let bend_len = std::f64::consts::PI * r;
    let total = 2.0 * length + bend_len;
    let width = length;
    let mut v = Vec::with_capacity(n_along * n_across);
    for j in 0..n_across {
        let y = width * j as f64 / (n_across - 1) as f64;
        for i in 0..n_along {
            let s = total * i as f64 / (n_along - 1) as f64;
            let p = if s <= length {
                [s, y, -r]
            } else if s <= length + bend_len {
                let a = (s - length) / r - std::f64::consts::FRAC_PI_2;
                [length + r * a.cos(), y, r * a.sin()]
            } else {
                [length - (s - length - bend_len), y, r]
            };
            v.push(p);
        }
    }
    let mut f = Vec::new();
    for j in 0..n_across - 1 {
        for i in 0..n_along - 1 {
            let a = j * n_along + i;
            let b = a + 1;
            let c = a + n_along;
            let d = c + 1;
            f.push([a, b, d]);
            f.push([a, d, c]);
        }
    }
    TriMesh::new(v, f).expect("folded sheet is valid")
}
