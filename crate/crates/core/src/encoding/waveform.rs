use std::path::Path;
use std::rc::Rc;

use rand::Rng;

use crate::autograd::{Graph, Linear, ParamStore, Tensor, Var};
use crate::error::{Error, Result};
use crate::linalg::CsrMatrix;

pub const DEFAULT_DERIVATIVE_ORDER: usize = 2;
pub const DEFAULT_FEATURE_WIDTH: usize = 32;

/// One cardiac cycle of inlet flow, uniformly sampled.
#[derive(Debug, Clone, PartialEq)]
pub struct Waveform {
    samples: Vec<f64>,
    period: f64,
}

impl Waveform {
    pub fn new(samples: Vec<f64>, period: f64) -> Result<Self> {
        if samples.len() < 8 {
            return Err(Error::Invalid(format!("waveform needs T >= 8, got {}", samples.len())));
        }
        if let Some(i) = samples.iter().position(|x| !x.is_finite()) {
            return Err(Error::Invalid(format!("non-finite waveform sample at {i}")));
        }
        if !(period > 0.0 && period.is_finite()) {
            return Err(Error::Invalid(format!("bad waveform period {period}")));
        }
        Ok(Waveform { samples, period })
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    pub fn dt(&self) -> f64 {
        self.period / self.samples.len() as f64
    }

    pub fn times(&self) -> Vec<f64> {
        (0..self.len()).map(|i| i as f64 * self.dt()).collect()
    }

    pub fn mean(&self) -> f64 {
        self.samples.iter().sum::<f64>() / self.len() as f64
    }

    /// Parse `t,g` CSV. Rows are assumed uniform starting at `t = 0`, so the
    /// period is `t_max * T / (T - 1)`.
    pub fn from_csv_reader(r: impl std::io::Read) -> Result<Self> {
        let mut rd = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(r);
        let headers = rd.headers().map_err(csv_err)?.clone();
        if headers.len() < 2 || &headers[0] != "t" || &headers[1] != "g" {
            return Err(Error::Parse {
                line: 1,
                msg: "waveform header must be `t,g`".into(),
            });
        }
        let mut t = Vec::new();
        let mut g = Vec::new();
        for (i, rec) in rd.records().enumerate() {
            let rec = rec.map_err(csv_err)?;
            let parse = |k: usize| -> Result<f64> {
                rec.get(k).and_then(|s| s.parse().ok()).ok_or_else(|| Error::Parse {
                    line: i + 2,
                    msg: format!("bad field {k}"),
                })
            };
            t.push(parse(0)?);
            g.push(parse(1)?);
        }
        if g.len() < 2 {
            return Err(Error::Invalid("waveform has fewer than 2 rows".into()));
        }
        let tmax = t.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let n = g.len() as f64;
        Waveform::new(g, tmax * n / (n - 1.0))
    }

    pub fn load_csv(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let f = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::from_csv_reader(f)
    }

    pub fn to_csv_string(&self) -> String {
        let mut s = String::from("t,g\n");
        for (t, g) in self.times().iter().zip(&self.samples) {
            s.push_str(&format!("{t:.17e},{g:.17e}\n"));
        }
        s
    }

    pub fn save_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_csv_string()).map_err(|e| Error::io(path, e))
    }
}

fn csv_err(e: csv::Error) -> Error {
    let line = e.position().map_or(0, |p| p.line() as usize);
    Error::Parse {
        line,
        msg: e.to_string(),
    }
}

/// `(k + 1) x T` stack of the waveform and its first `k` periodic
/// central-difference derivatives.
pub fn waveform_derivatives(w: &Waveform, k: usize) -> Tensor {
    let t = w.len();
    let dt = w.dt();
    let mut rows = vec![w.samples.clone()];
    for _ in 0..k {
        let prev = rows.last().unwrap();
        let d: Vec<f64> = (0..t)
            .map(|i| (prev[(i + 1) % t] - prev[(i + t - 1) % t]) / (2.0 * dt))
            .collect();
        rows.push(d);
    }
    Tensor::new(k + 1, t, rows.concat())
}

/// Per-timestep encoder output, `T x F`.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveformFeatures {
    values: Tensor,
    masked: bool,
}

impl WaveformFeatures {
    pub fn new(values: Tensor) -> Self {
        WaveformFeatures { values, masked: false }
    }

    /// All-zero features for a steady case.
    pub fn masked(t: usize, f: usize) -> Self {
        WaveformFeatures {
            values: Tensor::zeros(t, f),
            masked: true,
        }
    }

    pub fn values(&self) -> &Tensor {
        &self.values
    }

    pub fn is_masked(&self) -> bool {
        self.masked
    }

    pub fn len(&self) -> usize {
        self.values.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.values.rows() == 0
    }

    pub fn width(&self) -> usize {
        self.values.cols()
    }
}

/// Row `frame` of the feature matrix.
pub fn slice_time(features: &WaveformFeatures, frame: usize) -> Result<Vec<f64>> {
    if frame >= features.len() {
        return Err(Error::OutOfRange {
            index: frame,
            len: features.len(),
        });
    }
    Ok(features.values.row(frame).to_vec())
}

pub fn mask_temporal(features: &WaveformFeatures) -> WaveformFeatures {
    WaveformFeatures::masked(features.len(), features.width())
}

/// Width-5 circular convolution over time as gather + dense map.
#[derive(Debug, Clone)]
struct Conv1d {
    lin: Linear,
}

const KERNEL: usize = 5;

impl Conv1d {
    fn new(store: &mut ParamStore, name: &str, c_in: usize, c_out: usize, rng: &mut impl Rng) -> Self {
        Conv1d {
            lin: Linear::new(store, name, KERNEL * c_in, c_out, true, rng),
        }
    }

    fn forward(&self, g: &mut Graph, store: &ParamStore, x: Var) -> Var {
        let t = g.shape(x).0;
        let half = KERNEL as isize / 2;
        let taps: Vec<Var> = (-half..=half)
            .map(|o| {
                let idx: Vec<usize> = (0..t as isize).map(|i| (i + o).rem_euclid(t as isize) as usize).collect();
                g.gather_rows(x, Rc::new(idx))
            })
            .collect();
        let stacked = g.concat_cols(&taps);
        self.lin.forward(g, store, stacked)
    }
}

fn avg_pool_matrix(t: usize) -> Rc<CsrMatrix> {
    let trip: Vec<_> = (0..t).map(|i| (i / 2, i, 0.5)).collect();
    Rc::new(CsrMatrix::from_triplets(t / 2, t, &trip))
}

/// 1-d convolutional U-Net over the derivative stack.
#[derive(Debug, Clone)]
pub struct WaveformEncoder {
    pub in_channels: usize,
    pub width: usize,
    pub out_width: usize,
    enc1: Conv1d,
    enc2: Conv1d,
    mid: Conv1d,
    dec2: Conv1d,
    dec1: Conv1d,
    head: Linear,
}

impl WaveformEncoder {
    pub fn new(store: &mut ParamStore, name: &str, in_channels: usize, width: usize, out_width: usize, rng: &mut impl Rng) -> Self {
        let w = width;
        WaveformEncoder {
            in_channels,
            width,
            out_width,
            enc1: Conv1d::new(store, &format!("{name}.enc1"), in_channels, w, rng),
            enc2: Conv1d::new(store, &format!("{name}.enc2"), w, 2 * w, rng),
            mid: Conv1d::new(store, &format!("{name}.mid"), 2 * w, 2 * w, rng),
            dec2: Conv1d::new(store, &format!("{name}.dec2"), 4 * w, w, rng),
            dec1: Conv1d::new(store, &format!("{name}.dec1"), 2 * w, w, rng),
            head: Linear::new(store, &format!("{name}.head"), w, out_width, true, rng),
        }
    }

    /// `stack` is `C x T` as returned by [`waveform_derivatives`]; returns `T x F`.
    pub fn forward(&self, g: &mut Graph, store: &ParamStore, stack: &Tensor) -> Result<Var> {
        if stack.rows() != self.in_channels {
            return Err(Error::Shape(format!(
                "encoder expects {} channels, got {}",
                self.in_channels,
                stack.rows()
            )));
        }
        let t = stack.cols();
        let tp = t.div_ceil(4) * 4;
        // reflect-pad the tail up to a multiple of 4
        let idx: Vec<usize> = (0..tp)
            .map(|i| if i < t { i } else { (2 * (t - 1)).saturating_sub(i) % t })
            .collect();
        let x0 = g.constant(stack.transposed());
        let x = g.gather_rows(x0, Rc::new(idx));

        let e1 = self.enc1.forward(g, store, x);
        let e1 = g.gelu(e1);
        let p1 = g.spmm(avg_pool_matrix(tp), e1);
        let e2 = self.enc2.forward(g, store, p1);
        let e2 = g.gelu(e2);
        let p2 = g.spmm(avg_pool_matrix(tp / 2), e2);
        let b = self.mid.forward(g, store, p2);
        let b = g.gelu(b);
        let u2 = g.gather_rows(b, Rc::new((0..tp / 2).map(|i| i / 2).collect()));
        let c2 = g.concat_cols(&[u2, e2]);
        let d2 = self.dec2.forward(g, store, c2);
        let d2 = g.gelu(d2);
        let u1 = g.gather_rows(d2, Rc::new((0..tp).map(|i| i / 2).collect()));
        let c1 = g.concat_cols(&[u1, e1]);
        let d1 = self.dec1.forward(g, store, c1);
        let d1 = g.gelu(d1);
        let out = self.head.forward(g, store, d1);
        Ok(if tp == t { out } else { g.slice_rows(out, 0, t) })
    }
}

/// Run the encoder outside of training.
pub fn encode_waveform(enc: &WaveformEncoder, store: &ParamStore, stack: &Tensor) -> Result<WaveformFeatures> {
    let mut g = Graph::new();
    let out = enc.forward(&mut g, store, stack)?;
    Ok(WaveformFeatures::new(g.value(out).clone()))
}
