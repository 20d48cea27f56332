use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::autograd::Tensor;
use crate::error::{Error, Result};
use crate::mesh::VectorField;

/// WSS vectors over a cycle, `T x N x 3`.
#[derive(Debug, Clone, PartialEq)]
pub struct WssSeries {
    frames: Vec<VectorField>,
    times: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct BinHeader {
    #[serde(rename = "T")]
    t: usize,
    #[serde(rename = "N")]
    n: usize,
    dtype: String,
    layout: String,
}

const LAYOUT: &str = "t-major n-major xyz";

impl WssSeries {
    pub fn new(frames: Vec<VectorField>, times: Vec<f64>) -> Result<Self> {
        if frames.is_empty() {
            return Err(Error::Invalid("series has no frames".into()));
        }
        if frames.len() != times.len() {
            return Err(Error::Shape(format!("{} frames but {} times", frames.len(), times.len())));
        }
        let n = frames[0].len();
        if frames.iter().any(|f| f.len() != n) {
            return Err(Error::Shape("frames disagree on node count".into()));
        }
        if frames.iter().flat_map(|f| f.values.iter().flatten()).any(|x| !x.is_finite()) {
            return Err(Error::Invalid("non-finite WSS value".into()));
        }
        Ok(WssSeries { frames, times })
    }

    /// Single steady frame at time 0.
    pub fn steady(field: VectorField) -> Result<Self> {
        Self::new(vec![field], vec![0.0])
    }

    /// Frames `t` from `T x N x 3` row-major data with uniform spacing `dt`.
    pub fn from_flat(t: usize, n: usize, data: &[f64], dt: f64) -> Result<Self> {
        if data.len() != t * n * 3 {
            return Err(Error::Shape(format!("expected {} values, got {}", t * n * 3, data.len())));
        }
        let frames = data
            .chunks_exact(n * 3)
            .map(VectorField::from_flat)
            .collect::<Result<Vec<_>>>()?;
        Self::new(frames, (0..t).map(|i| i as f64 * dt).collect())
    }

    pub fn num_frames(&self) -> usize {
        self.frames.len()
    }

    pub fn num_nodes(&self) -> usize {
        self.frames[0].len()
    }

    pub fn frames(&self) -> &[VectorField] {
        &self.frames
    }

    pub fn frame(&self, t: usize) -> &VectorField {
        &self.frames[t]
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn flat(&self) -> Vec<f64> {
        self.frames.iter().flat_map(|f| f.flat()).collect()
    }

    /// `N x 3` tensor of frame `t`.
    pub fn frame_tensor(&self, t: usize) -> Tensor {
        Tensor::new(self.num_nodes(), 3, self.frames[t].flat())
    }

    /// `N x 3T` tensor, columns `3t..3t+3` hold frame `t`.
    pub fn node_major(&self) -> Tensor {
        let n = self.num_nodes();
        let t = self.num_frames();
        Tensor::from_fn(n, 3 * t, |v, c| self.frames[c / 3].values[v][c % 3])
    }

    /// Inverse of [`WssSeries::node_major`].
    pub fn from_node_major(m: &Tensor, times: Vec<f64>) -> Result<Self> {
        if m.cols() % 3 != 0 || m.cols() / 3 != times.len() {
            return Err(Error::Shape(format!("{} columns for {} frames", m.cols(), times.len())));
        }
        let frames = (0..times.len())
            .map(|t| VectorField::new((0..m.rows()).map(|v| [0, 1, 2].map(|k| m.get(v, 3 * t + k))).collect()))
            .collect();
        Self::new(frames, times)
    }

    pub fn map(&self, f: impl Fn([f64; 3]) -> [f64; 3]) -> Result<Self> {
        let frames = self
            .frames
            .iter()
            .map(|fr| VectorField::new(fr.values.iter().map(|&v| f(v)).collect()))
            .collect();
        Self::new(frames, self.times.clone())
    }

    pub fn write_to(&self, mut w: impl Write) -> Result<()> {
        let header = BinHeader {
            t: self.num_frames(),
            n: self.num_nodes(),
            dtype: "f32".into(),
            layout: LAYOUT.into(),
        };
        let mut buf = serde_json::to_vec(&header)?;
        buf.push(b'\n');
        for x in self.flat() {
            buf.extend_from_slice(&(x as f32).to_le_bytes());
        }
        w.write_all(&buf).map_err(|e| Error::io("<wss>", e))
    }

    /// Read a series; frame spacing is `dt`.
    pub fn read_from(r: impl Read, dt: f64) -> Result<Self> {
        let mut r = BufReader::new(r);
        let mut line = String::new();
        r.read_line(&mut line).map_err(|e| Error::io("<wss>", e))?;
        let h: BinHeader = serde_json::from_str(line.trim_end())?;
        if h.dtype != "f32" || h.layout != LAYOUT {
            return Err(Error::Invalid(format!("unsupported wss encoding {} / {}", h.dtype, h.layout)));
        }
        let mut bytes = Vec::new();
        r.read_to_end(&mut bytes).map_err(|e| Error::io("<wss>", e))?;
        if bytes.len() != h.t * h.n * 3 * 4 {
            return Err(Error::Shape(format!(
                "payload has {} bytes, header implies {}",
                bytes.len(),
                h.t * h.n * 12
            )));
        }
        let data: Vec<f64> = bytes
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64)
            .collect();
        Self::from_flat(h.t, h.n, &data, dt)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut buf = Vec::new();
        self.write_to(&mut buf)?;
        std::fs::write(path, buf).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>, dt: f64) -> Result<Self> {
        let path = path.as_ref();
        let f = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::read_from(f, dt)
    }
}
