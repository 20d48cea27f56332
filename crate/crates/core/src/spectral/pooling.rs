//! Topology-preserving mesh hierarchy for graph down/up-sampling.
//!
//! Each level is produced by half-edge collapses ordered by quadric error.
//! A collapse `b -> a` is taken only if it passes the link condition,
//! keeps boundary vertices on their loop, and flips no face. Because every
//! coarse vertex is a surviving fine vertex and faces only ever have a
//! corner relabelled, coarse edges are always images of fine edges.

use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashSet};

use crate::error::{Error, Result};
use crate::linalg::CsrMatrix;
use crate::mesh::vec3::{cross, dot, norm, sub, Vec3};
use crate::mesh::{SurfaceField, TriMesh};

#[derive(Debug, Clone)]
pub struct PoolingLevel {
    /// For each vertex of the finer mesh, its coarse vertex.
    pub fine_to_coarse: Vec<usize>,
    pub coarse: TriMesh,
}

#[derive(Debug, Clone)]
pub struct PoolingMap {
    fine: TriMesh,
    levels: Vec<PoolingLevel>,
    requested_ratio: f64,
}

impl PoolingMap {
    pub fn num_levels(&self) -> usize {
        self.levels.len()
    }

    pub fn level(&self, i: usize) -> &PoolingLevel {
        &self.levels[i]
    }

    /// Mesh at depth `i`; 0 is the fine mesh.
    pub fn mesh(&self, i: usize) -> &TriMesh {
        if i == 0 {
            &self.fine
        } else {
            &self.levels[i - 1].coarse
        }
    }

    pub fn requested_ratio(&self) -> f64 {
        self.requested_ratio
    }

    /// Achieved vertex ratio coarse/fine per level.
    pub fn achieved_ratios(&self) -> Vec<f64> {
        (0..self.levels.len())
            .map(|i| self.mesh(i + 1).num_vertices() as f64 / self.mesh(i).num_vertices() as f64)
            .collect()
    }

    fn check_level(&self, level: usize) -> Result<&PoolingLevel> {
        self.levels.get(level).ok_or(Error::OutOfRange {
            index: level,
            len: self.levels.len(),
        })
    }

    /// `coarse x fine` averaging matrix for `level`.
    pub fn pool_matrix(&self, level: usize) -> Result<CsrMatrix> {
        let lv = self.check_level(level)?;
        let nc = lv.coarse.num_vertices();
        let mut count = vec![0usize; nc];
        for &c in &lv.fine_to_coarse {
            count[c] += 1;
        }
        let t: Vec<_> = lv
            .fine_to_coarse
            .iter()
            .enumerate()
            .map(|(f, &c)| (c, f, 1.0 / count[c] as f64))
            .collect();
        Ok(CsrMatrix::from_triplets(nc, lv.fine_to_coarse.len(), &t))
    }

    /// `fine x coarse` copy matrix for `level`.
    pub fn unpool_matrix(&self, level: usize) -> Result<CsrMatrix> {
        let lv = self.check_level(level)?;
        let t: Vec<_> = lv.fine_to_coarse.iter().enumerate().map(|(f, &c)| (f, c, 1.0)).collect();
        Ok(CsrMatrix::from_triplets(lv.fine_to_coarse.len(), lv.coarse.num_vertices(), &t))
    }

    /// Verify the hierarchy: surjective maps, no false coarse edges,
    /// preserved Euler characteristic and boundary-loop count.
    pub fn check_invariants(&self) -> Result<()> {
        for (l, lv) in self.levels.iter().enumerate() {
            let fine = self.mesh(l);
            let coarse = &lv.coarse;
            if lv.fine_to_coarse.len() != fine.num_vertices() {
                return Err(Error::Invalid(format!("level {l}: map length mismatch")));
            }
            let mut hit = vec![false; coarse.num_vertices()];
            for &c in &lv.fine_to_coarse {
                if c >= hit.len() {
                    return Err(Error::Invalid(format!("level {l}: coarse index {c} out of range")));
                }
                hit[c] = true;
            }
            if let Some(c) = hit.iter().position(|h| !h) {
                return Err(Error::Invalid(format!("level {l}: coarse vertex {c} has no preimage")));
            }
            let image: HashSet<[usize; 2]> = fine
                .edges()
                .iter()
                .map(|&[a, b]| {
                    let (x, y) = (lv.fine_to_coarse[a], lv.fine_to_coarse[b]);
                    [x.min(y), x.max(y)]
                })
                .collect();
            if let Some(e) = coarse.edges().iter().find(|e| !image.contains(*e)) {
                return Err(Error::Invalid(format!("level {l}: false coarse edge {e:?}")));
            }
            if fine.euler_characteristic() != coarse.euler_characteristic() {
                return Err(Error::Invalid(format!("level {l}: Euler characteristic changed")));
            }
            if fine.boundary_loops().len() != coarse.boundary_loops().len() {
                return Err(Error::Invalid(format!("level {l}: boundary loop count changed")));
            }
        }
        Ok(())
    }
}

/// Mean over each coarse vertex's preimage, from depth `level` to `level + 1`.
pub fn pool<const D: usize>(map: &PoolingMap, level: usize, field: &SurfaceField<D>) -> Result<SurfaceField<D>> {
    let lv = map.check_level(level)?;
    field.check_on(map.mesh(level))?;
    let nc = lv.coarse.num_vertices();
    let mut acc = vec![[0.0; D]; nc];
    let mut count = vec![0usize; nc];
    for (f, &c) in lv.fine_to_coarse.iter().enumerate() {
        count[c] += 1;
        for k in 0..D {
            acc[c][k] += field.values[f][k];
        }
    }
    for (a, n) in acc.iter_mut().zip(count) {
        for x in a.iter_mut() {
            *x /= n as f64;
        }
    }
    Ok(SurfaceField::new(acc))
}

/// Copy each coarse value back to its preimage, from `level + 1` to `level`.
pub fn unpool<const D: usize>(map: &PoolingMap, level: usize, field: &SurfaceField<D>) -> Result<SurfaceField<D>> {
    let lv = map.check_level(level)?;
    field.check_on(&lv.coarse)?;
    Ok(SurfaceField::new(lv.fine_to_coarse.iter().map(|&c| field.values[c]).collect()))
}

/// Build `levels` decimation levels, each targeting `ratio` of the
/// previous vertex count. Levels that cannot reach the target stop early;
/// see [`PoolingMap::achieved_ratios`].
pub fn build_pooling(canonical: &TriMesh, levels: usize, ratio: f64) -> Result<PoolingMap> {
    if !(ratio > 0.0 && ratio < 1.0) {
        return Err(Error::Invalid(format!("pooling ratio {ratio} outside (0, 1)")));
    }
    if levels == 0 {
        return Err(Error::Invalid("pooling needs at least one level".into()));
    }
    let mut out = Vec::with_capacity(levels);
    let mut cur = canonical.clone();
    for _ in 0..levels {
        let target = ((cur.num_vertices() as f64 * ratio).ceil() as usize).max(1);
        let lv = decimate(&cur, target)?;
        if lv.coarse.num_vertices() as f64 > ratio * cur.num_vertices() as f64 + 1.0 {
            log::warn!(
                "decimation stopped at {} of {} vertices (target {target})",
                lv.coarse.num_vertices(),
                cur.num_vertices()
            );
        }
        cur = lv.coarse.clone();
        out.push(lv);
    }
    Ok(PoolingMap {
        fine: canonical.clone(),
        levels: out,
        requested_ratio: ratio,
    })
}

type Quadric = [f64; 10];

fn plane_quadric(n: Vec3, p: Vec3, w: f64) -> Quadric {
    let d = -dot(n, p);
    let (a, b, c) = (n[0], n[1], n[2]);
    [a * a, a * b, a * c, a * d, b * b, b * c, b * d, c * c, c * d, d * d].map(|x| x * w)
}

fn quadric_add(a: &mut Quadric, b: &Quadric) {
    for (x, y) in a.iter_mut().zip(b) {
        *x += y;
    }
}

fn quadric_eval(q: &Quadric, p: Vec3) -> f64 {
    let [x, y, z] = p;
    q[0] * x * x + 2.0 * q[1] * x * y + 2.0 * q[2] * x * z + 2.0 * q[3] * x + q[4] * y * y
        + 2.0 * q[5] * y * z
        + 2.0 * q[6] * y
        + q[7] * z * z
        + 2.0 * q[8] * z
        + q[9]
}

#[derive(PartialEq, PartialOrd)]
struct Cost(f64);
impl Eq for Cost {}
impl Ord for Cost {
    fn cmp(&self, o: &Self) -> std::cmp::Ordering {
        self.0.total_cmp(&o.0)
    }
}

struct Decimator {
    pos: Vec<Vec3>,
    faces: Vec<[usize; 3]>,
    face_alive: Vec<bool>,
    vert_faces: Vec<Vec<usize>>,
    alive: Vec<bool>,
    boundary: Vec<bool>,
    /// Boundary loop id and per-loop live vertex count.
    loop_id: Vec<usize>,
    loop_len: Vec<usize>,
    quadric: Vec<Quadric>,
    version: Vec<u32>,
    parent: Vec<usize>,
    live: usize,
    closed: bool,
}

impl Decimator {
    fn new(mesh: &TriMesh) -> Self {
        let n = mesh.num_vertices();
        let pos = mesh.vertices().to_vec();
        let faces = mesh.faces().to_vec();
        let mut vert_faces = vec![Vec::new(); n];
        let mut quadric = vec![[0.0; 10]; n];
        for (fi, f) in faces.iter().enumerate() {
            let c = mesh.face_cross(fi);
            let a2 = norm(c);
            if a2 > 0.0 {
                let q = plane_quadric(c.map(|x| x / a2), pos[f[0]], a2 / 2.0);
                for &v in f {
                    quadric_add(&mut quadric[v], &q);
                }
            }
            for &v in f {
                vert_faces[v].push(fi);
            }
        }
        // penalty planes orthogonal to boundary edges keep the outline
        let counts = crate::mesh::edge_face_counts(&faces);
        for f in &faces {
            for k in 0..3 {
                let (a, b) = (f[k], f[(k + 1) % 3]);
                if counts[&(a.min(b), a.max(b))] == 1 {
                    let e = sub(pos[b], pos[a]);
                    let fn_ = cross(sub(pos[f[1]], pos[f[0]]), sub(pos[f[2]], pos[f[0]]));
                    if let Some(n) = crate::mesh::vec3::normalize(cross(e, fn_)) {
                        let q = plane_quadric(n, pos[a], 10.0 * dot(e, e));
                        quadric_add(&mut quadric[a], &q);
                        quadric_add(&mut quadric[b], &q);
                    }
                }
            }
        }
        let loops = mesh.boundary_loops();
        let mut loop_id = vec![usize::MAX; n];
        for (i, l) in loops.iter().enumerate() {
            for &v in l {
                loop_id[v] = i;
            }
        }
        Decimator {
            pos,
            face_alive: vec![true; faces.len()],
            faces,
            vert_faces,
            alive: vec![true; n],
            boundary: mesh.boundary_flags().to_vec(),
            loop_len: loops.iter().map(Vec::len).collect(),
            loop_id,
            quadric,
            version: vec![0; n],
            parent: (0..n).collect(),
            live: n,
            closed: loops.is_empty(),
        }
    }

    fn live_faces(&self, v: usize) -> impl Iterator<Item = usize> + '_ {
        self.vert_faces[v].iter().copied().filter(|&f| self.face_alive[f])
    }

    fn neighbours(&self, v: usize) -> Vec<usize> {
        let mut out: Vec<usize> = self
            .live_faces(v)
            .flat_map(|f| self.faces[f])
            .filter(|&w| w != v)
            .collect();
        out.sort_unstable();
        out.dedup();
        out
    }

    fn cost(&self, b: usize, a: usize) -> f64 {
        let mut q = self.quadric[a];
        quadric_add(&mut q, &self.quadric[b]);
        quadric_eval(&q, self.pos[a]).max(0.0)
    }

    fn push_edges(&self, v: usize, heap: &mut BinaryHeap<Reverse<(Cost, usize, usize, u32, u32)>>) {
        for w in self.neighbours(v) {
            for (b, a) in [(v, w), (w, v)] {
                heap.push(Reverse((Cost(self.cost(b, a)), b, a, self.version[b], self.version[a])));
            }
        }
    }

    /// Can `b` be merged into `a` without changing topology or flipping faces?
    fn valid(&self, b: usize, a: usize) -> bool {
        if !self.alive[a] || !self.alive[b] {
            return false;
        }
        if self.closed && self.live <= 4 {
            return false;
        }
        let shared: Vec<usize> = self.live_faces(b).filter(|&f| self.faces[f].contains(&a)).collect();
        if shared.is_empty() {
            return false;
        }
        if self.boundary[b] {
            if !self.boundary[a] || shared.len() != 1 || self.loop_id[a] != self.loop_id[b] {
                return false;
            }
            if self.loop_len[self.loop_id[b]] <= 3 {
                return false;
            }
        } else if self.boundary[a] && shared.len() != 2 {
            return false;
        }
        // link condition: common neighbours are exactly the opposite corners
        let na = self.neighbours(a);
        let nb = self.neighbours(b);
        let common = na.iter().filter(|x| nb.binary_search(x).is_ok()).count();
        if common != shared.len() {
            return false;
        }
        for f in self.live_faces(b) {
            if shared.contains(&f) {
                continue;
            }
            let tri = self.faces[f];
            let p = tri.map(|v| self.pos[v]);
            let before = cross(sub(p[1], p[0]), sub(p[2], p[0]));
            let q = tri.map(|v| if v == b { self.pos[a] } else { self.pos[v] });
            let after = cross(sub(q[1], q[0]), sub(q[2], q[0]));
            let (nb_, na_) = (norm(before), norm(after));
            if na_ <= 1e-12 * nb_.max(1e-300) || dot(before, after) <= 0.2 * nb_ * na_ {
                return false;
            }
        }
        true
    }

    fn collapse(&mut self, b: usize, a: usize) {
        let fs: Vec<usize> = self.live_faces(b).collect();
        for f in fs {
            if self.faces[f].contains(&a) {
                self.face_alive[f] = false;
            } else {
                for v in self.faces[f].iter_mut() {
                    if *v == b {
                        *v = a;
                    }
                }
                self.vert_faces[a].push(f);
            }
        }
        let qb = self.quadric[b];
        quadric_add(&mut self.quadric[a], &qb);
        self.alive[b] = false;
        self.parent[b] = a;
        self.version[a] += 1;
        self.version[b] += 1;
        if self.boundary[b] {
            self.loop_len[self.loop_id[b]] -= 1;
        }
        self.live -= 1;
    }

    fn root(&self, mut v: usize) -> usize {
        while self.parent[v] != v {
            v = self.parent[v];
        }
        v
    }
}

fn decimate(mesh: &TriMesh, target: usize) -> Result<PoolingLevel> {
    let mut d = Decimator::new(mesh);
    let mut heap = BinaryHeap::new();
    for v in 0..mesh.num_vertices() {
        for w in d.neighbours(v) {
            if v < w {
                for (b, a) in [(v, w), (w, v)] {
                    heap.push(Reverse((Cost(d.cost(b, a)), b, a, 0u32, 0u32)));
                }
            }
        }
    }
    while d.live > target {
        let Some(Reverse((_, b, a, vb, va))) = heap.pop() else {
            break;
        };
        if d.version[b] != vb || d.version[a] != va || !d.valid(b, a) {
            continue;
        }
        d.collapse(b, a);
        d.push_edges(a, &mut heap);
    }
    let mut new_id = vec![usize::MAX; mesh.num_vertices()];
    let mut verts = Vec::with_capacity(d.live);
    for v in 0..mesh.num_vertices() {
        if d.alive[v] {
            new_id[v] = verts.len();
            verts.push(d.pos[v]);
        }
    }
    let faces: Vec<[usize; 3]> = d
        .faces
        .iter()
        .zip(&d.face_alive)
        .filter(|(_, &al)| al)
        .map(|(f, _)| f.map(|v| new_id[v]))
        .collect();
    let fine_to_coarse = (0..mesh.num_vertices()).map(|v| new_id[d.root(v)]).collect();
    Ok(PoolingLevel {
        fine_to_coarse,
        coarse: TriMesh::new(verts, faces)?,
    })
}
