use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::errors::{mse, rl2, rl2_star, rl2_star_curve};
use super::render::{default_views, Renderer};
use super::ssim::ssim_padded;
use crate::error::{Error, Result};
use crate::mesh::TriMesh;
use crate::surrogates::WssSeries;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EvalOptions {
    /// Rendered SSIM is skipped when zero views are requested.
    pub views: usize,
    pub size: usize,
    /// Render every `frame_stride`-th frame.
    pub frame_stride: usize,
}

impl Default for EvalOptions {
    fn default() -> Self {
        EvalOptions {
            views: 6,
            size: 256,
            frame_stride: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub cases: usize,
    pub mse: f64,
    pub ssim: f64,
    pub ssim_r: Option<f64>,
    pub rl2: f64,
    pub rl2_skipped: usize,
    pub rl2_star: f64,
    pub rl2_star_curve: Vec<f64>,
    /// Frame indices at which `ssim_r_curve` was sampled.
    pub ssim_r_frames: Vec<usize>,
    pub ssim_r_curve: Vec<f64>,
}

pub const SUMMARY_COLUMNS: [&str; 5] = ["mse", "ssim", "ssim_r", "rl2", "rl2_star"];

impl MetricsReport {
    pub fn summary_values(&self) -> [f64; 5] {
        [self.mse, self.ssim, self.ssim_r.unwrap_or(f64::NAN), self.rl2, self.rl2_star]
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Per-frame table: `frame,rl2_star,ssim_r`, blank where a frame was not rendered.
    pub fn curves_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["frame", "rl2_star", "ssim_r"]).map_err(csv_err)?;
        for (f, r) in self.rl2_star_curve.iter().enumerate() {
            let s = self
                .ssim_r_frames
                .iter()
                .position(|&x| x == f)
                .map_or(String::new(), |i| self.ssim_r_curve[i].to_string());
            w.write_record([f.to_string(), r.to_string(), s]).map_err(csv_err)?;
        }
        String::from_utf8(w.into_inner().map_err(|e| Error::Invalid(e.to_string()))?)
            .map_err(|e| Error::Invalid(e.to_string()))
    }

    pub fn save(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let j = dir.join("metrics.json");
        std::fs::write(&j, self.to_json()?).map_err(|e| Error::io(&j, e))?;
        let c = dir.join("curves.csv");
        std::fs::write(&c, self.curves_csv()?).map_err(|e| Error::io(&c, e))
    }
}

pub(crate) fn csv_err(e: csv::Error) -> Error {
    Error::Invalid(format!("csv: {e}"))
}

/// Full metric suite over a set of cases. Curves require a common frame count.
pub fn evaluate(pred: &[WssSeries], truth: &[WssSeries], meshes: &[&TriMesh], opts: &EvalOptions) -> Result<MetricsReport> {
    if meshes.len() != truth.len() {
        return Err(Error::Shape(format!("{} meshes for {} cases", meshes.len(), truth.len())));
    }
    let mse = mse(pred, truth)?;
    let r = rl2(pred, truth)?;
    let star = rl2_star(pred, truth)?;
    let frames = truth[0].num_frames();
    let curve = if truth.iter().all(|t| t.num_frames() == frames) {
        rl2_star_curve(pred, truth)?
    } else {
        Vec::new()
    };
    let pairs: Vec<(usize, usize)> = truth
        .iter()
        .enumerate()
        .flat_map(|(c, t)| (0..t.num_frames()).map(move |f| (c, f)))
        .collect();
    let padded: Vec<f64> = pairs
        .par_iter()
        .map(|&(c, f)| ssim_padded(&pred[c].frame(f).magnitudes(), &truth[c].frame(f).magnitudes()))
        .collect::<Result<_>>()?;
    let ssim = padded.iter().sum::<f64>() / padded.len() as f64;

    let (mut ssim_r, mut ssim_r_frames, mut ssim_r_curve) = (None, Vec::new(), Vec::new());
    if opts.views > 0 && !curve.is_empty() {
        let stride = opts.frame_stride.max(1);
        ssim_r_frames = (0..frames).step_by(stride).collect();
        let views = default_views(opts.views)?;
        let per_case: Vec<Vec<f64>> = meshes
            .iter()
            .zip(pred.iter().zip(truth))
            .map(|(m, (p, t))| {
                let r = Renderer::new(m, &views, opts.size)?;
                ssim_r_frames
                    .iter()
                    .map(|&f| r.ssim(&p.frame(f).magnitudes(), &t.frame(f).magnitudes()))
                    .collect()
            })
            .collect::<Result<_>>()?;
        ssim_r_curve = (0..ssim_r_frames.len())
            .map(|i| per_case.iter().map(|c| c[i]).sum::<f64>() / per_case.len() as f64)
            .collect();
        ssim_r = Some(ssim_r_curve.iter().sum::<f64>() / ssim_r_curve.len() as f64);
    }
    Ok(MetricsReport {
        cases: truth.len(),
        mse,
        ssim,
        ssim_r,
        rl2: r.percent,
        rl2_skipped: r.skipped,
        rl2_star: star,
        rl2_star_curve: curve,
        ssim_r_frames,
        ssim_r_curve,
    })
}
