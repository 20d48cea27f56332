//! One entry point over all model families, with the waveform encoder.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{CaseInputs, GpsConfig, GpsModel, GraphUNet, SequenceUNet, SpectralConfig, SpectralSurrogate, UNetConfig, UNetTopology};
use crate::autograd::{Graph, ParamStore, Tensor, Var};
use crate::encoding::WaveformEncoder;
use crate::error::{Error, Result};
use crate::spectral::{GhdBasis, PoolingMap};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum NetConfig {
    Gps(GpsConfig),
    Unet(UNetConfig),
    Sequence {
        unet: UNetConfig,
        frames: usize,
        film: bool,
    },
    Spectral(SpectralConfig),
}

impl NetConfig {
    pub fn family(&self) -> &'static str {
        match self {
            NetConfig::Gps(_) => "gps",
            NetConfig::Unet(_) => "unet",
            NetConfig::Sequence { .. } => "sequence",
            NetConfig::Spectral(_) => "spectral",
        }
    }

    fn pooling_levels(&self) -> Option<usize> {
        match self {
            NetConfig::Unet(c) | NetConfig::Sequence { unet: c, .. } => Some(c.levels),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub net: NetConfig,
    /// Rows of the waveform derivative stack.
    pub wave_channels: usize,
    pub wave_hidden: usize,
    /// Per-timestep feature width `F`.
    pub wave_width: usize,
    /// Length of the flattened token vector.
    pub token_width: usize,
    pub seed: u64,
}

impl ModelConfig {
    pub fn new(net: NetConfig, token_width: usize, seed: u64) -> Self {
        ModelConfig {
            net,
            wave_channels: crate::encoding::waveform::DEFAULT_DERIVATIVE_ORDER + 1,
            wave_hidden: 16,
            wave_width: crate::encoding::waveform::DEFAULT_FEATURE_WIDTH,
            token_width,
            seed,
        }
    }
}

/// Which frame of a case to predict.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Frame {
    /// Temporal features masked to zero.
    Steady,
    At(usize),
}

#[derive(Debug, Clone)]
enum Net {
    Gps(GpsModel),
    Unet(GraphUNet, UNetTopology),
    Sequence(SequenceUNet, UNetTopology),
    Spectral(SpectralSurrogate),
}

/// Resources a model family may need beyond its parameters.
#[derive(Debug, Clone, Copy)]
pub struct ModelContext<'a> {
    pub basis: &'a GhdBasis,
    pub pooling: Option<&'a PoolingMap>,
}

/// Parameters, waveform encoder and network of one surrogate.
#[derive(Debug, Clone)]
pub struct Surrogate {
    pub config: ModelConfig,
    pub store: ParamStore,
    wave: WaveformEncoder,
    net: Net,
}

impl Surrogate {
    pub fn new(config: ModelConfig, ctx: ModelContext<'_>) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let mut store = ParamStore::new();
        let wave = WaveformEncoder::new(
            &mut store,
            "wave",
            config.wave_channels,
            config.wave_hidden,
            config.wave_width,
            &mut rng,
        );
        let topo = match config.net.pooling_levels() {
            Some(levels) => {
                let map = ctx
                    .pooling
                    .ok_or_else(|| Error::Invalid(format!("{} model needs a pooling map", config.net.family())))?;
                if map.num_levels() != levels {
                    return Err(Error::Shape(format!(
                        "config asks for {levels} levels, pooling map has {}",
                        map.num_levels()
                    )));
                }
                Some(UNetTopology::new(map)?)
            }
            None => None,
        };
        let f = config.wave_width;
        let net = match &config.net {
            NetConfig::Gps(c) => Net::Gps(GpsModel::new(&mut store, "gps", c.clone(), f, &mut rng)?),
            NetConfig::Unet(c) => Net::Unet(GraphUNet::new(&mut store, "unet", c.clone(), f, &mut rng), topo.unwrap()),
            NetConfig::Sequence { unet, frames, film } => Net::Sequence(
                SequenceUNet::new(&mut store, "seq", unet.clone(), f, *frames, *film, &mut rng),
                topo.unwrap(),
            ),
            NetConfig::Spectral(c) => Net::Spectral(SpectralSurrogate::new(
                &mut store,
                "spectral",
                c.clone(),
                ctx.basis,
                config.token_width,
                f,
                &mut rng,
            )?),
        };
        Ok(Surrogate {
            config,
            store,
            wave,
            net,
        })
    }

    pub fn is_sequence(&self) -> bool {
        matches!(self.net, Net::Sequence(..))
    }

    pub fn num_parameters(&self) -> usize {
        self.store.num_scalars()
    }

    /// `T x F` waveform features, zero when the case is steady.
    pub fn wave_features(&self, g: &mut Graph, store: &ParamStore, inputs: &CaseInputs, frames: usize) -> Result<Var> {
        match &inputs.wave {
            Some(stack) => self.wave.forward(g, store, stack),
            None => Ok(g.constant(Tensor::zeros(frames, self.config.wave_width))),
        }
    }

    fn frame_features(&self, g: &mut Graph, store: &ParamStore, inputs: &CaseInputs, frame: Frame) -> Result<Var> {
        match (frame, &inputs.wave) {
            (Frame::Steady, _) => Ok(g.constant(Tensor::zeros(1, self.config.wave_width))),
            (Frame::At(t), Some(stack)) => {
                if t >= stack.cols() {
                    return Err(Error::OutOfRange {
                        index: t,
                        len: stack.cols(),
                    });
                }
                let all = self.wave.forward(g, store, stack)?;
                Ok(g.slice_rows(all, t, 1))
            }
            (Frame::At(_), None) => Err(Error::Invalid("transient frame requested for a steady case".into())),
        }
    }

    /// One `N x 3` frame from a per-snapshot family, with parameters from `store`.
    pub fn forward_frame_with(&self, g: &mut Graph, store: &ParamStore, inputs: &CaseInputs, frame: Frame) -> Result<Var> {
        let wf = match &self.net {
            Net::Sequence(..) => return Err(Error::Invalid("sequence model predicts whole cycles".into())),
            _ => self.frame_features(g, store, inputs, frame)?,
        };
        match &self.net {
            Net::Gps(m) => m.forward(g, store, inputs, wf),
            Net::Unet(m, topo) => m.forward(g, store, topo, inputs, wf),
            Net::Spectral(m) => m.forward(g, store, inputs, wf),
            Net::Sequence(..) => unreachable!(),
        }
    }

    pub fn forward_frame(&self, g: &mut Graph, inputs: &CaseInputs, frame: Frame) -> Result<Var> {
        self.forward_frame_with(g, &self.store, inputs, frame)
    }

    /// All frames as `N x 3T`. Steady cases give `T = 1` for snapshot
    /// families and the configured `T` for the sequence family.
    pub fn forward_series_with(
        &self,
        g: &mut Graph,
        store: &ParamStore,
        inputs: &CaseInputs,
        prior: Option<&Tensor>,
    ) -> Result<Var> {
        match &self.net {
            Net::Sequence(m, topo) => {
                let wf = self.wave_features(g, store, inputs, m.frames)?;
                m.forward(g, store, topo, inputs, wf, prior)
            }
            _ => {
                if inputs.wave.is_none() {
                    return self.forward_frame_with(g, store, inputs, Frame::Steady);
                }
                let wf_all = self.wave.forward(g, store, inputs.wave.as_ref().unwrap())?;
                let t = g.shape(wf_all).0;
                let mut outs = Vec::with_capacity(t);
                for i in 0..t {
                    let wf = g.slice_rows(wf_all, i, 1);
                    outs.push(match &self.net {
                        Net::Gps(m) => m.forward(g, store, inputs, wf)?,
                        Net::Unet(m, topo) => m.forward(g, store, topo, inputs, wf)?,
                        Net::Spectral(m) => m.forward(g, store, inputs, wf)?,
                        Net::Sequence(..) => unreachable!(),
                    });
                }
                Ok(if outs.len() == 1 { outs[0] } else { g.concat_cols(&outs) })
            }
        }
    }

    pub fn predict_frame(&self, inputs: &CaseInputs, frame: Frame) -> Result<Tensor> {
        let mut g = Graph::new();
        let y = self.forward_frame(&mut g, inputs, frame)?;
        Ok(g.value(y).clone())
    }

    pub fn predict_series(&self, inputs: &CaseInputs, prior: Option<&Tensor>) -> Result<Tensor> {
        let mut g = Graph::new();
        let y = self.forward_series_with(&mut g, &self.store, inputs, prior)?;
        Ok(g.value(y).clone())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::build_pooling;
    use crate::surrogates::fixtures::small_case;

    fn small_nets() -> Vec<NetConfig> {
        let unet = UNetConfig {
            hidden: 6,
            order: 2,
            levels: 2,
            features: Default::default(),
        };
        vec![
            NetConfig::Gps(GpsConfig {
                hidden: 8,
                blocks: 1,
                heads: 2,
                ..Default::default()
            }),
            NetConfig::Unet(unet.clone()),
            NetConfig::Sequence {
                unet,
                frames: 16,
                film: false,
            },
            NetConfig::Spectral(SpectralConfig { k: 10, hidden: 8 }),
        ]
    }

    #[test]
    fn every_family_predicts_series_of_the_right_shape() {
        let f = small_case(1, 16);
        let pool = build_pooling(f.basis.canonical(), 2, 0.5).unwrap();
        let ctx = ModelContext {
            basis: &f.basis,
            pooling: Some(&pool),
        };
        for net in small_nets() {
            let cfg = ModelConfig::new(net, f.inputs.tokens.cols(), 7);
            let m = Surrogate::new(cfg, ctx).unwrap();
            let y = m.predict_series(&f.inputs, None).unwrap();
            assert_eq!(y.shape(), (42, 48));
            assert!(y.all_finite());
            let mut steady = f.inputs.clone();
            steady.wave = None;
            let s = m.predict_series(&steady, None).unwrap();
            assert!(s.all_finite());
            if !m.is_sequence() {
                assert_eq!(s.shape(), (42, 3));
                let one = m.predict_frame(&f.inputs, Frame::At(5)).unwrap();
                assert!(one.max_abs_diff(&y.transposed().slice_rows(15, 3).transposed()) < 1e-12);
                assert!(m.predict_frame(&f.inputs, Frame::At(16)).is_err());
                assert!(m.predict_frame(&steady, Frame::At(0)).is_err());
            }
        }
    }

    #[test]
    fn unet_requires_matching_pooling() {
        let f = small_case(1, 16);
        let pool = build_pooling(f.basis.canonical(), 1, 0.5).unwrap();
        let cfg = ModelConfig::new(small_nets().remove(1), 60, 0);
        let no_pool = ModelContext {
            basis: &f.basis,
            pooling: None,
        };
        assert!(Surrogate::new(cfg.clone(), no_pool).is_err());
        let wrong = ModelContext {
            basis: &f.basis,
            pooling: Some(&pool),
        };
        assert!(Surrogate::new(cfg, wrong).is_err());
    }

    #[test]
    fn construction_is_deterministic() {
        let f = small_case(1, 16);
        let ctx = ModelContext {
            basis: &f.basis,
            pooling: None,
        };
        let cfg = ModelConfig::new(small_nets().remove(0), 60, 3);
        let a = Surrogate::new(cfg.clone(), ctx).unwrap();
        let b = Surrogate::new(cfg, ctx).unwrap();
        assert_eq!(a.store.to_f32(), b.store.to_f32());
    }

    #[test]
    fn config_json_is_tagged() {
        let cfg = ModelConfig::new(small_nets().remove(3), 60, 3);
        let s = serde_json::to_string(&cfg).unwrap();
        assert!(s.contains("\"family\":\"spectral\""));
        let back: ModelConfig = serde_json::from_str(&s).unwrap();
        assert_eq!(back, cfg);
    }
}
