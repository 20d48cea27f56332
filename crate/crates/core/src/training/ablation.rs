use serde::{Deserialize, Serialize};

use super::data::Split;
use super::trainer::{select_pool, train, Predictor, TrainConfig, TrainData};
use crate::error::{Error, Result};
use crate::metrics::{csv_err, evaluate, EvalOptions, MetricsReport};
use crate::surrogates::{ModelConfig, NetConfig, UNetConfig, WssSeries};
use crate::synth::CaseKind;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AblationConfig {
    /// Transient training-set sizes (before the validation holdout).
    pub sizes: Vec<usize>,
    pub seeds: Vec<u64>,
    pub net: NetConfig,
    /// Base settings; `augment`, `transient_cap` and `seed` are set per run.
    pub train: TrainConfig,
    pub eval: EvalOptions,
}

impl Default for AblationConfig {
    fn default() -> Self {
        AblationConfig {
            sizes: vec![25, 50, 100],
            seeds: vec![0, 1],
            net: NetConfig::Unet(UNetConfig::default()),
            train: TrainConfig::default(),
            eval: EvalOptions::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationRow {
    pub size: usize,
    pub augment: bool,
    pub seed: u64,
    pub report: MetricsReport,
    /// `rl2*(aug) - rl2*(no aug)` at the same size and seed; set on augmented rows.
    pub delta_rl2_star: Option<f64>,
}

/// Train every (seed, size, augmentation) combination and score it on the
/// transient test cases.
pub fn ablation_run(data: &TrainData<'_>, split: &Split, cfg: &AblationConfig) -> Result<Vec<AblationRow>> {
    Ok(ablation_models(data, split, cfg)?.into_iter().map(|(r, _)| r).collect())
}

/// [`ablation_run`], also returning the selected model of each row.
pub fn ablation_models(
    data: &TrainData<'_>,
    split: &Split,
    cfg: &AblationConfig,
) -> Result<Vec<(AblationRow, Predictor)>> {
    let test: Vec<usize> = split
        .test
        .iter()
        .copied()
        .filter(|&i| data.records[i].kind == CaseKind::Transient)
        .collect();
    if test.is_empty() || cfg.sizes.is_empty() || cfg.seeds.is_empty() {
        return Err(Error::Invalid("ablation needs transient test cases, sizes and seeds".into()));
    }
    let truth: Vec<WssSeries> = test.iter().map(|&i| data.records[i].labels.clone()).collect();
    let meshes: Vec<_> = test.iter().map(|&i| &data.records[i].mesh).collect();
    let token_width = data.encoded[0].tokens.cols();
    let mut rows = Vec::new();
    for &seed in &cfg.seeds {
        for &size in &cfg.sizes {
            let mut base = None;
            for augment in [false, true] {
                let tcfg = TrainConfig {
                    augment,
                    transient_cap: Some(size),
                    seed,
                    ..cfg.train.clone()
                };
                let pool = select_pool(data.records, &split.train, &tcfg);
                let out = train(ModelConfig::new(cfg.net.clone(), token_width, seed), data, &pool, &tcfg)?;
                let pred = out.best.predict_all(data, &test)?;
                let report = evaluate(&pred, &truth, &meshes, &cfg.eval)?;
                log::info!("size {size} aug {augment} seed {seed}: rl2* {:.3}%", report.rl2_star);
                let delta = if augment {
                    base.map(|b: f64| report.rl2_star - b)
                } else {
                    base = Some(report.rl2_star);
                    None
                };
                let row = AblationRow {
                    size,
                    augment,
                    seed,
                    report,
                    delta_rl2_star: delta,
                };
                rows.push((row, out.best));
            }
        }
    }
    Ok(rows)
}

pub fn ablation_csv(rows: &[AblationRow]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["size", "augment", "seed", "mse", "ssim", "ssim_r", "rl2", "rl2_star", "delta_rl2_star"])
        .map_err(csv_err)?;
    let num = |x: f64| if x.is_finite() { x.to_string() } else { String::new() };
    for r in rows {
        let v = r.report.summary_values();
        let mut rec = vec![r.size.to_string(), r.augment.to_string(), r.seed.to_string()];
        rec.extend(v.iter().map(|&x| num(x)));
        rec.push(r.delta_rl2_star.map_or(String::new(), num));
        w.write_record(&rec).map_err(csv_err)?;
    }
    String::from_utf8(w.into_inner().map_err(|e| Error::Invalid(e.to_string()))?).map_err(|e| Error::Invalid(e.to_string()))
}
