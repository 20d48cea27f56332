use std::path::Path;

use rayon::prelude::*;

use super::ssim::{ssim, Image};
use crate::error::{Error, Result};
use crate::mesh::vec3::{cross, dot, mat_vec, normalize, sub, Vec3};
use crate::mesh::TriMesh;

pub const DEFAULT_SIZE: usize = 256;
pub const DEFAULT_VIEWS: usize = 6;

/// Orthographic camera: looks from `+dir` towards the centre with `up` on screen.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct View {
    pub dir: Vec3,
    pub up: Vec3,
}

impl View {
    pub fn new(dir: Vec3, up: Vec3) -> Result<Self> {
        let d = normalize(dir).ok_or_else(|| Error::Invalid("zero view direction".into()))?;
        let u = normalize(sub(up, crate::mesh::vec3::scale(d, dot(up, d))))
            .ok_or_else(|| Error::Invalid("up vector parallel to view direction".into()))?;
        Ok(View { dir: d, up: u })
    }

    fn looking(dir: Vec3) -> Self {
        let up = if dir[2].abs() > 0.9 { [0.0, 1.0, 0.0] } else { [0.0, 0.0, 1.0] };
        View::new(dir, up).expect("up chosen away from dir")
    }

    pub fn rotated(&self, rot: &[[f64; 3]; 3]) -> Self {
        View {
            dir: mat_vec(rot, self.dir),
            up: mat_vec(rot, self.up),
        }
    }

    fn right(&self) -> Vec3 {
        cross(self.up, self.dir)
    }
}

/// `+-x, +-y, +-z` for up to six views, a Fibonacci sphere beyond that.
pub fn default_views(count: usize) -> Result<Vec<View>> {
    if count == 0 {
        return Err(Error::Invalid("need at least one view".into()));
    }
    if count <= 6 {
        let axes = [
            [1.0, 0.0, 0.0],
            [-1.0, 0.0, 0.0],
            [0.0, 1.0, 0.0],
            [0.0, -1.0, 0.0],
            [0.0, 0.0, 1.0],
            [0.0, 0.0, -1.0],
        ];
        return Ok(axes[..count].iter().map(|&d| View::looking(d)).collect());
    }
    let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
    Ok((0..count)
        .map(|i| {
            let z = 1.0 - 2.0 * (i as f64 + 0.5) / count as f64;
            let r = (1.0 - z * z).sqrt();
            let th = golden * i as f64;
            View::looking([r * th.cos(), r * th.sin(), z])
        })
        .collect())
}

/// Per-view face-index buffers for one mesh, reused across frames.
#[derive(Debug, Clone)]
pub struct Renderer {
    size: usize,
    faces: Vec<[usize; 3]>,
    buffers: Vec<Vec<Option<u32>>>,
}

fn rasterize(mesh: &TriMesh, view: &View, centre: Vec3, radius: f64, size: usize) -> Vec<Option<u32>> {
    let right = view.right();
    let s = size as f64;
    let proj: Vec<[f64; 3]> = mesh
        .vertices()
        .iter()
        .map(|&p| {
            let r = sub(p, centre);
            let x = (dot(r, right) / radius + 1.0) * 0.5 * s;
            let y = (1.0 - dot(r, view.up) / radius) * 0.5 * s;
            [x, y, dot(r, view.dir)]
        })
        .collect();
    let mut depth = vec![f64::NEG_INFINITY; size * size];
    let mut ids = vec![None; size * size];
    for (f, tri) in mesh.faces().iter().enumerate() {
        let [a, b, c] = tri.map(|i| proj[i]);
        let area = (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0]);
        if area.abs() < 1e-12 {
            continue;
        }
        let lo_x = a[0].min(b[0]).min(c[0]).floor().max(0.0) as usize;
        let hi_x = (a[0].max(b[0]).max(c[0]).ceil() as usize).min(size);
        let lo_y = a[1].min(b[1]).min(c[1]).floor().max(0.0) as usize;
        let hi_y = (a[1].max(b[1]).max(c[1]).ceil() as usize).min(size);
        for py in lo_y..hi_y {
            for px in lo_x..hi_x {
                let (x, y) = (px as f64 + 0.5, py as f64 + 0.5);
                let w0 = ((b[0] - x) * (c[1] - y) - (b[1] - y) * (c[0] - x)) / area;
                let w1 = ((c[0] - x) * (a[1] - y) - (c[1] - y) * (a[0] - x)) / area;
                let w2 = 1.0 - w0 - w1;
                if w0 < 0.0 || w1 < 0.0 || w2 < 0.0 {
                    continue;
                }
                let z = w0 * a[2] + w1 * b[2] + w2 * c[2];
                let k = py * size + px;
                if z > depth[k] {
                    depth[k] = z;
                    ids[k] = Some(f as u32);
                }
            }
        }
    }
    ids
}

impl Renderer {
    pub fn new(mesh: &TriMesh, views: &[View], size: usize) -> Result<Self> {
        if views.is_empty() || size < 8 {
            return Err(Error::Invalid(format!("{} views at {size}px", views.len())));
        }
        let n = mesh.num_vertices() as f64;
        let mut centre = [0.0; 3];
        for p in mesh.vertices() {
            for k in 0..3 {
                centre[k] += p[k] / n;
            }
        }
        let radius = mesh
            .vertices()
            .iter()
            .map(|&p| crate::mesh::vec3::norm(sub(p, centre)))
            .fold(0.0, f64::max)
            * 1.05;
        if !(radius > 1e-12) {
            return Err(Error::Invalid("degenerate bounding box".into()));
        }
        let buffers = views
            .par_iter()
            .map(|v| rasterize(mesh, v, centre, radius, size))
            .collect();
        Ok(Renderer {
            size,
            faces: mesh.faces().to_vec(),
            buffers,
        })
    }

    pub fn num_views(&self) -> usize {
        self.buffers.len()
    }

    pub fn size(&self) -> usize {
        self.size
    }

    /// Flat-shaded grayscale image of `values` with `[lo, hi]` mapped to `[0, 1]`.
    pub fn image(&self, view: usize, values: &[f64], lo: f64, hi: f64) -> Result<Image> {
        let buf = self
            .buffers
            .get(view)
            .ok_or(Error::OutOfRange { index: view, len: self.buffers.len() })?;
        let span = if hi > lo { hi - lo } else { 1.0 };
        let face_gray: Vec<f64> = self
            .faces
            .iter()
            .map(|t| {
                let v = (values[t[0]] + values[t[1]] + values[t[2]]) / 3.0;
                ((v - lo) / span).clamp(0.0, 1.0)
            })
            .collect();
        let px = buf.iter().map(|f| f.map_or(0.0, |f| face_gray[f as usize])).collect();
        Image::new(self.size, self.size, px)
    }

    /// Mean per-view SSIM with the colormap fixed to the true-field range.
    pub fn ssim(&self, pred_mag: &[f64], true_mag: &[f64]) -> Result<f64> {
        self.check_len(pred_mag)?;
        self.check_len(true_mag)?;
        let (lo, hi) = min_max(true_mag);
        let scores: Vec<f64> = (0..self.num_views())
            .into_par_iter()
            .map(|v| ssim(&self.image(v, pred_mag, lo, hi)?, &self.image(v, true_mag, lo, hi)?, 1.0))
            .collect::<Result<_>>()?;
        Ok(scores.iter().sum::<f64>() / scores.len() as f64)
    }

    /// Write one PNG per view as `{stem}_v{k}.png`.
    pub fn save_views(&self, values: &[f64], lo: f64, hi: f64, dir: &Path, stem: &str) -> Result<()> {
        self.check_len(values)?;
        for v in 0..self.num_views() {
            self.image(v, values, lo, hi)?.save_png(dir.join(format!("{stem}_v{v}.png")))?;
        }
        Ok(())
    }

    fn check_len(&self, values: &[f64]) -> Result<()> {
        let n = self.faces.iter().flatten().max().map_or(0, |m| m + 1);
        if values.len() < n {
            return Err(Error::Shape(format!("{} values for {n} vertices", values.len())));
        }
        Ok(())
    }
}

pub fn min_max(v: &[f64]) -> (f64, f64) {
    v.iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| (lo.min(x), hi.max(x)))
}

/// Rendered SSIM from the default views at the default resolution.
pub fn ssim_rendered(mesh: &TriMesh, pred_mag: &[f64], true_mag: &[f64], views: usize) -> Result<f64> {
    Renderer::new(mesh, &default_views(views)?, DEFAULT_SIZE)?.ssim(pred_mag, true_mag)
}
