use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::data::{CaseRecord, Sampler};
use super::norm::Normalizer;
use crate::autograd::{AdamW, Graph, Tensor};
use crate::error::{Error, Result};
use crate::metrics;
use crate::spectral::{build_pooling, GhdBasis, PoolingMap};
use crate::surrogates::{CaseInputs, Checkpoint, Frame, ModelConfig, ModelContext, NetConfig, Surrogate, WssSeries};
use crate::synth::CaseKind;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    /// Train fraction of the train/test split.
    pub split_ratio: f64,
    /// Fraction of the training cases held out to pick the best checkpoint.
    pub val_fraction: f64,
    pub batch_size: usize,
    pub epochs: usize,
    /// Steps per epoch without augmentation; defaults to one pass over the
    /// fitted transient cases. Augmented runs take `1 + steady_ratio` times as
    /// many steps so an epoch sees the same transient items on average.
    pub steps_per_epoch: Option<usize>,
    pub lr: f64,
    pub weight_decay: f64,
    /// Multiply the learning rate by `lr_gamma` every `lr_step` epochs.
    pub lr_step: usize,
    pub lr_gamma: f64,
    pub augment: bool,
    /// Steady:transient items per batch on average.
    pub steady_ratio: f64,
    pub transient_cap: Option<usize>,
    pub steady_cap: Option<usize>,
    /// Validate every this many epochs; the final epoch always validates.
    pub eval_every: usize,
    pub grad_clip: Option<f64>,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            split_ratio: 0.9,
            val_fraction: 0.1,
            batch_size: 10,
            epochs: 250,
            steps_per_epoch: None,
            lr: 3e-4,
            weight_decay: 1e-4,
            lr_step: 50,
            lr_gamma: 0.75,
            augment: true,
            steady_ratio: 1.0,
            transient_cap: None,
            steady_cap: None,
            eval_every: 1,
            grad_clip: None,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let pos = [self.lr, self.lr_gamma, self.steady_ratio, self.split_ratio]
            .iter()
            .all(|&x| x > 0.0 && x.is_finite());
        if !pos
            || self.batch_size == 0
            || self.lr_step == 0
            || self.weight_decay < 0.0
            || self.split_ratio >= 1.0
            || !(0.0..1.0).contains(&self.val_fraction)
            || self.steps_per_epoch == Some(0)
            || self.grad_clip.is_some_and(|c| !(c > 0.0))
        {
            return Err(Error::Invalid(format!("bad training config: {self:?}")));
        }
        Ok(())
    }

    /// Optimizer steps per epoch for a fit set with `transient` transient
    /// cases out of `total`.
    pub fn epoch_steps(&self, transient: usize, total: usize) -> usize {
        let primary = if transient > 0 { transient } else { total };
        let base = self.steps_per_epoch.unwrap_or(primary.div_ceil(self.batch_size));
        if self.augment && transient > 0 && transient < total {
            (base as f64 * (1.0 + self.steady_ratio)).round() as usize
        } else {
            base
        }
    }

    /// Step schedule: `lr * gamma^(epoch / step)`.
    pub fn lr_at(&self, epoch: usize) -> f64 {
        self.lr * self.lr_gamma.powi((epoch / self.lr_step) as i32)
    }
}

/// Everything a run reads but does not own.
#[derive(Clone, Copy)]
pub struct TrainData<'a> {
    pub basis: &'a GhdBasis,
    pub pooling: Option<&'a PoolingMap>,
    pub records: &'a [CaseRecord],
    /// Unnormalized inputs, parallel to `records`.
    pub encoded: &'a [CaseInputs],
    /// Physical-unit `N x 3` steady priors for FiLM, parallel to `records`.
    pub priors: Option<&'a [Tensor]>,
}

impl TrainData<'_> {
    fn ctx(&self) -> ModelContext<'_> {
        ModelContext {
            basis: self.basis,
            pooling: self.pooling,
        }
    }
}

/// Apply the caps and the augmentation flag to a list of training cases,
/// keeping the given order.
pub fn select_pool(records: &[CaseRecord], train: &[usize], cfg: &TrainConfig) -> Vec<usize> {
    let mut n_s = 0;
    let mut n_t = 0;
    train
        .iter()
        .copied()
        .filter(|&i| match records[i].kind {
            CaseKind::Steady => {
                n_s += 1;
                cfg.augment && cfg.steady_cap.is_none_or(|c| n_s <= c)
            }
            CaseKind::Transient => {
                n_t += 1;
                cfg.transient_cap.is_none_or(|c| n_t <= c)
            }
        })
        .collect()
}

/// Split `pool` into fitted and validation cases. Validation draws from the
/// transient cases when there are any, otherwise from the steady ones.
pub fn holdout(records: &[CaseRecord], pool: &[usize], fraction: f64, seed: u64) -> (Vec<usize>, Vec<usize>) {
    let kind = if pool.iter().any(|&i| records[i].kind == CaseKind::Transient) {
        CaseKind::Transient
    } else {
        CaseKind::Steady
    };
    let mut cand: Vec<usize> = pool.iter().copied().filter(|&i| records[i].kind == kind).collect();
    let n = cand.len();
    let n_val = if n < 2 || fraction == 0.0 {
        0
    } else {
        ((fraction * n as f64).round() as usize).clamp(1, n - 1)
    };
    cand.shuffle(&mut ChaCha8Rng::seed_from_u64(seed ^ 0x5eed));
    let val: Vec<usize> = cand[n - n_val..].to_vec();
    let fit = pool.iter().copied().filter(|i| !val.contains(i)).collect();
    (fit, val)
}

/// A trained model with the scaling it was trained under.
#[derive(Debug, Clone)]
pub struct Predictor {
    pub model: Surrogate,
    pub norm: Normalizer,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct TrainMeta {
    normalizer: Normalizer,
    pooling_ratio: Option<f64>,
}

impl Predictor {
    /// Physical-unit prediction for a case; `prior` is the physical steady
    /// field for FiLM models.
    pub fn predict(&self, raw: &CaseInputs, record: &CaseRecord, prior: Option<&Tensor>) -> Result<WssSeries> {
        let inputs = self.norm.inputs(raw);
        let times = record.labels.times().to_vec();
        if self.model.is_sequence() {
            let p = prior.map(|p| self.scaled(p));
            let out = self.model.predict_series(&inputs, p.as_ref())?;
            let s = out.cols() / 3;
            let out = match record.kind {
                CaseKind::Transient => out,
                CaseKind::Steady => Tensor::from_fn(out.rows(), 3, |r, c| {
                    (0..s).map(|t| out.get(r, 3 * t + c)).sum::<f64>() / s as f64
                }),
            };
            return self.norm.series(&out, times);
        }
        let frames: Vec<Tensor> = match record.kind {
            CaseKind::Steady => vec![self.model.predict_frame(&inputs, Frame::Steady)?],
            CaseKind::Transient => (0..record.num_frames())
                .map(|t| self.model.predict_frame(&inputs, Frame::At(t)))
                .collect::<Result<_>>()?,
        };
        let n = frames[0].rows();
        let out = Tensor::from_fn(n, 3 * frames.len(), |r, c| frames[c / 3].get(r, c % 3));
        self.norm.series(&out, times)
    }

    /// Physical `N x 3` steady-state prediction of a snapshot model, used as
    /// the FiLM prior of sequence models.
    pub fn steady_prior(&self, raw: &CaseInputs) -> Result<Tensor> {
        if self.model.is_sequence() {
            return Err(Error::Invalid("steady priors come from snapshot models".into()));
        }
        let mut t = self.model.predict_frame(&self.norm.inputs(raw), Frame::Steady)?;
        t.scale_assign(self.norm.label_scale);
        Ok(t)
    }

    fn scaled(&self, prior: &Tensor) -> Tensor {
        prior.map(|x| x / self.norm.label_scale)
    }

    pub fn predict_all(&self, data: &TrainData<'_>, cases: &[usize]) -> Result<Vec<WssSeries>> {
        cases
            .iter()
            .map(|&i| self.predict(&data.encoded[i], &data.records[i], data.priors.map(|p| &p[i])))
            .collect()
    }

    /// Eq.-5 MSE in physical units over `cases`.
    pub fn mse(&self, data: &TrainData<'_>, cases: &[usize]) -> Result<f64> {
        let pred = self.predict_all(data, cases)?;
        let truth: Vec<WssSeries> = cases.iter().map(|&i| data.records[i].labels.clone()).collect();
        metrics::mse(&pred, &truth)
    }

    pub fn checkpoint(&self, step: u64, best_mse: f64) -> Result<Checkpoint> {
        let ratio = match &self.model.config.net {
            NetConfig::Unet(_) | NetConfig::Sequence { .. } => Some(POOLING_RATIO),
            _ => None,
        };
        let meta = TrainMeta {
            normalizer: self.norm.clone(),
            pooling_ratio: ratio,
        };
        Ok(Checkpoint::from_model(&self.model, step, best_mse, serde_json::to_value(meta)?))
    }

    /// Rebuild from a checkpoint written by [`train`].
    pub fn restore(ckpt: &Checkpoint, basis: &GhdBasis) -> Result<Self> {
        let meta: TrainMeta = serde_json::from_value(ckpt.header.extra.clone())?;
        let pooling = match (&ckpt.header.config.net, meta.pooling_ratio) {
            (NetConfig::Unet(c) | NetConfig::Sequence { unet: c, .. }, Some(r)) => {
                Some(build_pooling(basis.canonical(), c.levels, r)?)
            }
            _ => None,
        };
        let model = ckpt.restore(ModelContext {
            basis,
            pooling: pooling.as_ref(),
        })?;
        Ok(Predictor {
            model,
            norm: meta.normalizer,
        })
    }
}

/// Per-level vertex ratio of the pooling hierarchy used by the U-Net families.
pub const POOLING_RATIO: f64 = 0.35;

pub fn default_pooling(basis: &GhdBasis, net: &NetConfig) -> Result<Option<PoolingMap>> {
    match net {
        NetConfig::Unet(c) | NetConfig::Sequence { unet: c, .. } => {
            Ok(Some(build_pooling(basis.canonical(), c.levels, POOLING_RATIO)?))
        }
        _ => Ok(None),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochLog {
    pub epoch: usize,
    pub lr: f64,
    pub train_loss: f64,
    pub val_mse: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    /// Best model by validation MSE, parameters rounded to `f32`.
    pub best: Predictor,
    pub checkpoint: Checkpoint,
    pub best_epoch: usize,
    pub best_val_mse: Option<f64>,
    pub steps: u64,
    pub history: Vec<EpochLog>,
    pub fit_cases: Vec<usize>,
    pub val_cases: Vec<usize>,
}

fn batch_loss(
    g: &mut Graph,
    p: &Predictor,
    data: &TrainData<'_>,
    items: &[super::data::BatchItem],
) -> Result<crate::autograd::Var> {
    let mut total = None;
    for it in items {
        let rec = &data.records[it.case];
        debug_assert_eq!(rec.kind == CaseKind::Steady, it.frame == Frame::Steady);
        let inputs = p.norm.inputs(&data.encoded[it.case]);
        let (pred, target) = if p.model.is_sequence() {
            let prior = data.priors.map(|pr| p.scaled(&pr[it.case]));
            let pred = p.model.forward_series_with(g, &p.model.store, &inputs, prior.as_ref())?;
            let target = match it.frame {
                Frame::Steady => {
                    let f = p.norm.target_frame(&rec.labels, 0);
                    let t = g.shape(pred).1 / 3;
                    Tensor::from_fn(f.rows(), 3 * t, |r, c| f.get(r, c % 3))
                }
                Frame::At(_) => p.norm.target_series(&rec.labels),
            };
            (pred, target)
        } else {
            let pred = p.model.forward_frame_with(g, &p.model.store, &inputs, it.frame)?;
            let target = match it.frame {
                Frame::Steady => p.norm.target_frame(&rec.labels, 0),
                Frame::At(t) => p.norm.target_frame(&rec.labels, t),
            };
            (pred, target)
        };
        let l = g.mse_loss(pred, target);
        total = Some(match total {
            None => l,
            Some(acc) => g.add(acc, l),
        });
    }
    let total = total.ok_or_else(|| Error::Invalid("empty batch".into()))?;
    Ok(g.scale(total, 1.0 / items.len() as f64))
}

fn rounded(p: &Predictor) -> Predictor {
    let mut q = p.clone();
    q.model.store.round_to_f32();
    q
}

/// Train one model on `pool` (indices into `data.records`) and keep the
/// checkpoint with the lowest validation MSE.
pub fn train(model_cfg: ModelConfig, data: &TrainData<'_>, pool: &[usize], cfg: &TrainConfig) -> Result<TrainOutcome> {
    cfg.validate()?;
    if data.encoded.len() != data.records.len() {
        return Err(Error::Shape("encoded inputs and records differ in length".into()));
    }
    if pool.is_empty() {
        return Err(Error::Invalid("empty training pool".into()));
    }
    let (fit, val) = holdout(data.records, pool, cfg.val_fraction, cfg.seed);
    let norm = Normalizer::fit(
        &fit.iter().map(|&i| &data.encoded[i]).collect::<Vec<_>>(),
        &fit.iter().map(|&i| &data.records[i].labels).collect::<Vec<_>>(),
    )?;
    let model = Surrogate::new(model_cfg, data.ctx())?;
    let mut cur = Predictor { model, norm };
    let sampler = Sampler::new(data.records, &fit, cfg.batch_size, cfg.augment, cfg.steady_ratio)?;
    let transient = fit.iter().filter(|&&i| data.records[i].kind == CaseKind::Transient).count();
    let steps_per_epoch = cfg.epoch_steps(transient, fit.len());
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut opt = AdamW::new(&cur.model.store, cfg.weight_decay);

    let mut best = rounded(&cur);
    let mut best_val = if val.is_empty() { None } else { Some(best.mse(data, &val)?) };
    let mut best_epoch = 0;
    let mut history = Vec::with_capacity(cfg.epochs);
    let mut step = 0usize;
    for epoch in 0..cfg.epochs {
        let lr = cfg.lr_at(epoch);
        let mut loss_sum = 0.0;
        for _ in 0..steps_per_epoch {
            let items = sampler.batch(&mut rng);
            let mut g = Graph::new();
            let loss = batch_loss(&mut g, &cur, data, &items)?;
            let lv = g.value(loss).get(0, 0);
            if !lv.is_finite() {
                return Err(Error::NanLoss {
                    step,
                    lr,
                    case: data.records[items[0].case].name.clone(),
                });
            }
            let grads = g.backward(loss);
            let scale = match cfg.grad_clip {
                Some(c) => {
                    let n = grads.global_norm();
                    if n > c {
                        c / n
                    } else {
                        1.0
                    }
                }
                None => 1.0,
            };
            opt.step(&mut cur.model.store, &grads, lr, scale);
            loss_sum += lv;
            step += 1;
        }
        let last = epoch + 1 == cfg.epochs;
        let due = last || (cfg.eval_every > 0 && (epoch + 1) % cfg.eval_every == 0);
        let mut val_mse = None;
        if due {
            let snap = rounded(&cur);
            if val.is_empty() {
                if last {
                    best = snap;
                    best_epoch = epoch + 1;
                }
            } else {
                let m = snap.mse(data, &val)?;
                val_mse = Some(m);
                if best_val.is_none_or(|b| m < b) {
                    best_val = Some(m);
                    best = snap;
                    best_epoch = epoch + 1;
                }
            }
        }
        let log = EpochLog {
            epoch: epoch + 1,
            lr,
            train_loss: loss_sum / steps_per_epoch as f64,
            val_mse,
        };
        log::info!(
            "epoch {} lr {:.3e} loss {:.4e} val {:?}",
            log.epoch,
            log.lr,
            log.train_loss,
            log.val_mse
        );
        history.push(log);
    }
    let checkpoint = best.checkpoint(step as u64, best_val.unwrap_or(f64::NAN))?;
    Ok(TrainOutcome {
        best,
        checkpoint,
        best_epoch,
        best_val_mse: best_val,
        steps: step as u64,
        history,
        fit_cases: fit,
        val_cases: val,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::autograd::ParamStore;
    use crate::surrogates::{GpsConfig, UNetConfig};
    use crate::training::data::tests::tiny_records;
    use crate::training::data::BatchItem;
    use crate::training::encode_all;

    struct Fixture {
        basis: GhdBasis,
        records: Vec<CaseRecord>,
        encoded: Vec<CaseInputs>,
    }

    impl Fixture {
        fn new(steady: usize, transient: usize) -> Self {
            let (basis, records) = tiny_records(steady, transient, 8);
            let encoded = encode_all(&records, &basis).unwrap();
            Fixture { basis, records, encoded }
        }

        fn data(&self) -> TrainData<'_> {
            TrainData {
                basis: &self.basis,
                pooling: None,
                records: &self.records,
                encoded: &self.encoded,
                priors: None,
            }
        }

        fn model_cfg(&self, seed: u64) -> ModelConfig {
            let net = NetConfig::Gps(GpsConfig {
                hidden: 8,
                blocks: 1,
                heads: 2,
                ..Default::default()
            });
            ModelConfig::new(net, self.encoded[0].tokens.cols(), seed)
        }
    }

    fn quick() -> TrainConfig {
        TrainConfig {
            epochs: 2,
            steps_per_epoch: Some(2),
            batch_size: 2,
            ..Default::default()
        }
    }

    #[test]
    fn step_schedule() {
        let c = TrainConfig::default();
        assert_eq!(c.lr_at(0), 3e-4);
        assert_eq!(c.lr_at(49), 3e-4);
        assert!((c.lr_at(50) - 2.25e-4).abs() < 1e-18);
        assert!((c.lr_at(100) - 1.6875e-4).abs() < 1e-18);
        assert_eq!(TrainConfig { augment: false, ..c.clone() }.epoch_steps(45, 945), 5);
        assert_eq!(c.epoch_steps(45, 945), 10);
        assert_eq!(c.epoch_steps(0, 900), 90);
        assert_eq!(c.epoch_steps(45, 45), 5);
        let fixed = TrainConfig { steps_per_epoch: Some(50), steady_ratio: 0.5, ..c.clone() };
        assert_eq!(fixed.epoch_steps(45, 945), 75);
        assert!(TrainConfig { batch_size: 0, ..c.clone() }.validate().is_err());
        assert!(TrainConfig { split_ratio: 1.0, ..c }.validate().is_err());
    }

    #[test]
    fn zero_grad_step_applies_only_decoupled_decay() {
        let mut store = ParamStore::new();
        let id = store.add("p", Tensor::new(1, 3, vec![1.5, -2.0, 0.25]));
        let before = store.get(id).clone();
        let mut opt = AdamW::new(&store, 1e-4);
        let mut g = Graph::new();
        let p = g.param(&store, id);
        let s = g.sum_all(p);
        let zero = g.scale(s, 0.0);
        let grads = g.backward(zero);
        opt.step(&mut store, &grads, 3e-4, 1.0);
        for (a, b) in store.get(id).data().iter().zip(before.data()) {
            assert!((a - b * (1.0 - 3e-4 * 1e-4)).abs() <= 1e-15 * b.abs());
        }
    }

    #[test]
    fn zero_epochs_keep_the_initialization() {
        let f = Fixture::new(2, 3);
        let pool: Vec<usize> = (0..5).collect();
        let cfg = TrainConfig { epochs: 0, ..quick() };
        let out = train(f.model_cfg(3), &f.data(), &pool, &cfg).unwrap();
        let mut init = Surrogate::new(f.model_cfg(3), f.data().ctx()).unwrap();
        init.store.round_to_f32();
        assert_eq!(out.checkpoint.params, init.store.to_f32());
        assert_eq!(out.steps, 0);
        assert_eq!(out.best_epoch, 0);
    }

    #[test]
    fn perfect_labels_give_zero_loss() {
        let mut f = Fixture::new(1, 2);
        let data = f.data();
        let pool: Vec<usize> = (0..3).collect();
        let norm = Normalizer::fit(
            &f.encoded.iter().collect::<Vec<_>>(),
            &f.records.iter().map(|r| &r.labels).collect::<Vec<_>>(),
        )
        .unwrap();
        let p = Predictor {
            model: Surrogate::new(f.model_cfg(1), data.ctx()).unwrap(),
            norm,
        };
        let own = p.predict_all(&data, &pool).unwrap();
        for (r, s) in f.records.iter_mut().zip(own) {
            r.labels = s;
        }
        let items = [
            BatchItem { case: 0, frame: Frame::Steady },
            BatchItem { case: 1, frame: Frame::At(3) },
            BatchItem { case: 2, frame: Frame::At(7) },
        ];
        let mut g = Graph::new();
        let l = batch_loss(&mut g, &p, &f.data(), &items).unwrap();
        assert!(g.value(l).get(0, 0) < 1e-24);
    }

    #[test]
    fn restored_checkpoint_reproduces_validation_mse_bitwise() {
        let f = Fixture::new(2, 6);
        let pool: Vec<usize> = (0..8).collect();
        let cfg = TrainConfig { val_fraction: 0.2, ..quick() };
        let out = train(f.model_cfg(0), &f.data(), &pool, &cfg).unwrap();
        assert_eq!(out.val_cases.len(), 1);
        assert!(out.fit_cases.iter().all(|c| !out.val_cases.contains(c)));
        let mut buf = Vec::new();
        out.checkpoint.write_to(&mut buf).unwrap();
        let back = Checkpoint::read_from(&buf[..]).unwrap();
        let p = Predictor::restore(&back, &f.basis).unwrap();
        let m = p.mse(&f.data(), &out.val_cases).unwrap();
        assert_eq!(m.to_bits(), out.best_val_mse.unwrap().to_bits());
    }

    #[test]
    fn training_is_deterministic_and_reduces_loss() {
        let f = Fixture::new(2, 3);
        let pool: Vec<usize> = (0..5).collect();
        let cfg = TrainConfig {
            epochs: 6,
            lr: 3e-3,
            val_fraction: 0.0,
            ..quick()
        };
        let a = train(f.model_cfg(0), &f.data(), &pool, &cfg).unwrap();
        let b = train(f.model_cfg(0), &f.data(), &pool, &cfg).unwrap();
        assert_eq!(a.checkpoint.params, b.checkpoint.params);
        assert_eq!(a.history, b.history);
        let first = a.history[0].train_loss;
        let last = a.history.last().unwrap().train_loss;
        assert!(last < first, "{first} -> {last}");
    }

    #[test]
    fn non_finite_inputs_abort_with_the_case_name() {
        let mut f = Fixture::new(0, 3);
        f.encoded[1].node_feat.set(0, 0, f64::NAN);
        let pool = vec![1];
        let cfg = TrainConfig {
            augment: false,
            val_fraction: 0.0,
            ..quick()
        };
        match train(f.model_cfg(0), &f.data(), &pool, &cfg) {
            Err(Error::NanLoss { step, case, .. }) => {
                assert_eq!(step, 0);
                assert_eq!(case, f.records[1].name);
            }
            other => panic!("expected NanLoss, got {other:?}"),
        }
    }

    #[test]
    fn unet_checkpoint_rebuilds_its_pooling() {
        let f = Fixture::new(1, 2);
        let net = NetConfig::Unet(UNetConfig {
            hidden: 8,
            ..Default::default()
        });
        let pooling = default_pooling(&f.basis, &net).unwrap();
        let data = TrainData {
            pooling: pooling.as_ref(),
            ..f.data()
        };
        let cfg = TrainConfig { epochs: 1, val_fraction: 0.0, ..quick() };
        let out = train(ModelConfig::new(net, f.encoded[0].tokens.cols(), 0), &data, &[0, 1, 2], &cfg).unwrap();
        let p = Predictor::restore(&out.checkpoint, &f.basis).unwrap();
        let a = out.best.predict(&f.encoded[2], &f.records[2], None).unwrap();
        let b = p.predict(&f.encoded[2], &f.records[2], None).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn pool_selection_and_holdout() {
        let f = Fixture::new(3, 4);
        let order: Vec<usize> = (0..7).rev().collect();
        let cfg = TrainConfig {
            transient_cap: Some(2),
            steady_cap: Some(1),
            ..Default::default()
        };
        assert_eq!(select_pool(&f.records, &order, &cfg), vec![6, 5, 2]);
        let no_aug = TrainConfig { augment: false, ..cfg };
        assert_eq!(select_pool(&f.records, &order, &no_aug), vec![6, 5]);
        let (fit, val) = holdout(&f.records, &order, 0.25, 0);
        assert_eq!(val.len(), 1);
        assert_eq!(f.records[val[0]].kind, CaseKind::Transient);
        assert_eq!(fit.len(), 6);
        let (fit, val) = holdout(&f.records, &[0, 1, 2], 0.5, 0);
        assert_eq!((fit.len(), val.len()), (1, 2));
    }
}
