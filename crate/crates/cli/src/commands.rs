use std::path::Path;
use std::time::SystemTime;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use ghdwss::autograd::Tensor;
use ghdwss::mesh::{load_mesh, save_mesh};
use ghdwss::metrics::{default_views, derive_hemo, evaluate, min_max, EvalOptions, Image, Renderer};
use ghdwss::spectral::{compute_basis, fit_tokens, mesh_checksum, reconstruct, FitOptions, GhdBasis};
use ghdwss::surrogates::{Checkpoint, GpsConfig, ModelConfig, NetConfig, WssSeries};
use ghdwss::synth::{gen_dataset, make_canonical, GenConfig};
use ghdwss::training::{
    ablation_csv, ablation_run, default_pooling, encode_all, encode_case, load_dataset, select_pool, split_dataset,
    train, AblationConfig, CaseRecord, Dataset, Predictor, Split, TrainConfig, TrainData,
};
use ghdwss::{Error, Result};

use crate::record::RunRecord;
use crate::{CaseSelect, Cli, Command, Part, TrainOverrides};

/// A failed command, reported as one JSON object on stderr.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub kind: &'static str,
    pub command: &'static str,
    pub message: String,
}

impl Failure {
    fn new(command: &'static str, e: Error) -> Self {
        let (code, kind) = match e {
            Error::EigenNotConverged { .. } | Error::FitDiverged { .. } | Error::NanLoss { .. } => (3, "numerical"),
            Error::RejectionCap(_) => (3, "numerical"),
            Error::Io { .. } => (2, "io"),
            _ => (2, "validation"),
        };
        Failure {
            code,
            kind,
            command,
            message: e.to_string(),
        }
    }

    pub fn to_json(&self) -> String {
        json!({
            "error": self.kind,
            "command": self.command,
            "exit_code": self.code,
            "message": self.message,
        })
        .to_string()
    }
}

pub fn run(cli: &Cli) -> std::result::Result<(), Failure> {
    let name = command_name(&cli.command);
    if let Some(n) = cli.global.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Failure::new(name, Error::Invalid(e.to_string())))?;
    }
    dispatch(cli).map_err(|e| Failure::new(name, e))
}

fn command_name(c: &Command) -> &'static str {
    match c {
        Command::Basis { .. } => "basis",
        Command::Fit { .. } => "fit",
        Command::Gendata { .. } => "gendata",
        Command::Train { .. } => "train",
        Command::Predict { .. } => "predict",
        Command::Eval { .. } => "eval",
        Command::Ablate { .. } => "ablate",
        Command::Render { .. } => "render",
    }
}

fn dispatch(cli: &Cli) -> Result<()> {
    let g = &cli.global;
    let out = g.out.as_path();
    mkdir(out)?;
    let name = command_name(&cli.command);
    let started = SystemTime::now();
    let record = match &cli.command {
        Command::Basis { mesh, resolution, modes } => {
            let canonical = match mesh {
                Some(p) => load_mesh(p)?,
                None => make_canonical((*resolution).into()),
            };
            let basis = compute_basis(&canonical, *modes)?;
            save_mesh(&canonical, out.join("canonical.obj"))?;
            basis.save(out.join("basis.bin"))?;
            let summary = json!({
                "vertices": basis.num_vertices(),
                "modes": basis.mode_count(),
                "checksum": mesh_checksum(&canonical),
                "max_residual": basis.max_residual()?,
                "orthonormality_error": basis.orthonormality_error(),
                "eigenvalues": basis.eigenvalues(),
            });
            write_json(&out.join("basis.json"), &summary)?;
            RunRecord::new(name, json!({ "mesh": mesh, "modes": modes }), None)
        }
        Command::Fit { target, basis, max_iter } => {
            let basis = load_basis(basis)?;
            let target_mesh = load_mesh(target)?;
            let mut opts = FitOptions::default();
            if let Some(m) = max_iter {
                opts.max_iter = *m;
            }
            let fit = fit_tokens(&basis, &target_mesh, &opts)?;
            fit.tokens.save(out.join("tokens.json"))?;
            save_mesh(&reconstruct(&basis, &fit.tokens)?, out.join("fitted.obj"))?;
            write_json(
                &out.join("fit.json"),
                &json!({ "residual": fit.residual, "iterations": fit.iterations }),
            )?;
            RunRecord::new(name, json!({ "target": target, "max_iter": opts.max_iter }), None)
        }
        Command::Gendata {
            steady,
            transient,
            frames,
            modes,
            resolution,
        } => {
            let mut cfg: GenConfig = load_config(g.config.as_deref())?;
            set(&mut cfg.steady, *steady);
            set(&mut cfg.transient, *transient);
            set(&mut cfg.frames, *frames);
            set(&mut cfg.modes, *modes);
            set(&mut cfg.resolution, resolution.map(Into::into));
            set(&mut cfg.seed, g.seed);
            let manifest = gen_dataset(&cfg, out)?;
            log::info!("wrote {} cases to {}", manifest.cases.len(), out.display());
            RunRecord::new(name, serde_json::to_value(&cfg)?, Some(cfg.seed))
        }
        Command::Train {
            data,
            over,
            prior_ckpt,
            eval,
        } => {
            let mut cfg: TrainRun = load_config(g.config.as_deref())?;
            over.apply(&mut cfg.train);
            set(&mut cfg.train.seed, g.seed);
            cmd_train(data, &cfg, prior_ckpt.as_deref(), *eval, out)?;
            RunRecord::new(name, serde_json::to_value(&cfg)?, Some(cfg.train.seed))
        }
        Command::Predict {
            ckpt,
            data,
            select,
            prior_ckpt,
        } => {
            let ds = load_dataset(data)?;
            let cases = select.resolve(&ds)?;
            let pred = predict_cases(ckpt, &ds, &cases, prior_ckpt.as_deref())?;
            for (&i, s) in cases.iter().zip(&pred) {
                let dir = out.join(&ds.records[i].name);
                mkdir(&dir)?;
                s.save(dir.join("wss.bin"))?;
            }
            RunRecord::new(name, json!({ "ckpt": ckpt, "cases": case_names(&ds, &cases) }), None)
        }
        Command::Eval {
            data,
            ckpt,
            pred,
            select,
            prior_ckpt,
        } => {
            let opts: EvalOptions = load_config(g.config.as_deref())?;
            let ds = load_dataset(data)?;
            let cases = select.resolve(&ds)?;
            let predicted = match (ckpt, pred) {
                (Some(c), _) => predict_cases(c, &ds, &cases, prior_ckpt.as_deref())?,
                (None, Some(dir)) => read_predictions(dir, &ds, &cases)?,
                (None, None) => return Err(Error::Invalid("eval needs --ckpt or --pred".into())),
            };
            let truth: Vec<WssSeries> = cases.iter().map(|&i| ds.records[i].labels.clone()).collect();
            let meshes: Vec<_> = cases.iter().map(|&i| &ds.records[i].mesh).collect();
            let report = evaluate(&predicted, &truth, &meshes, &opts)?;
            report.save(out)?;
            println!("{}", summary_json(&report.summary_values()));
            RunRecord::new(
                name,
                json!({ "eval": opts, "ckpt": ckpt, "pred": pred, "cases": case_names(&ds, &cases) }),
                None,
            )
        }
        Command::Ablate { data, sizes, over } => {
            let mut cfg: AblationConfig = load_config(g.config.as_deref())?;
            over.apply(&mut cfg.train);
            if let Some(s) = sizes {
                cfg.sizes = s.clone();
            }
            if let Some(s) = g.seed {
                cfg.seeds = vec![s];
            }
            let ds = load_dataset(data)?;
            let encoded = encode_all(&ds.records, &ds.basis)?;
            let pooling = default_pooling(&ds.basis, &cfg.net)?;
            let tdata = TrainData {
                basis: &ds.basis,
                pooling: pooling.as_ref(),
                records: &ds.records,
                encoded: &encoded,
                priors: None,
            };
            let split = split_dataset(&ds.records, cfg.train.split_ratio, cfg.train.seed)?;
            let rows = ablation_run(&tdata, &split, &cfg)?;
            write_text(&out.join("ablation.csv"), &ablation_csv(&rows)?)?;
            write_json(&out.join("ablation.json"), &serde_json::to_value(&rows)?)?;
            RunRecord::new(name, serde_json::to_value(&cfg)?, cfg.seeds.first().copied())
        }
        Command::Render {
            data,
            case,
            pred,
            views,
            size,
            stride,
        } => {
            cmd_render(data, case, pred.as_deref(), *views, *size, *stride, out)?;
            RunRecord::new(
                name,
                json!({ "case": case, "pred": pred, "views": views, "size": size, "stride": stride }),
                None,
            )
        }
    };
    record.finish(out, started).map_err(|e| Error::io(out.join("run.json"), e))
}

/// Model, optimization and evaluation settings of `train`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainRun {
    pub net: NetConfig,
    pub train: TrainConfig,
    pub eval: EvalOptions,
}

impl Default for TrainRun {
    fn default() -> Self {
        TrainRun {
            net: NetConfig::Gps(GpsConfig::default()),
            train: TrainConfig::default(),
            eval: EvalOptions::default(),
        }
    }
}

impl TrainOverrides {
    fn apply(&self, t: &mut TrainConfig) {
        set(&mut t.epochs, self.epochs);
        if self.steps_per_epoch.is_some() {
            t.steps_per_epoch = self.steps_per_epoch;
        }
        set(&mut t.batch_size, self.batch_size);
        set(&mut t.lr, self.lr);
        set(&mut t.val_fraction, self.val_fraction);
        if self.no_augment {
            t.augment = false;
        }
    }
}

/// Case names of a train/test split, as written by `train`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitFile {
    pub train: Vec<String>,
    pub test: Vec<String>,
}

impl CaseSelect {
    fn resolve(&self, ds: &Dataset) -> Result<Vec<usize>> {
        let names: Vec<String> = if !self.cases.is_empty() {
            self.cases.clone()
        } else if let Some(p) = &self.split {
            let s: SplitFile = read_json(p)?;
            match self.part {
                Part::Train => s.train,
                Part::Test => s.test,
                Part::All => s.train.into_iter().chain(s.test).collect(),
            }
        } else {
            return Ok((0..ds.records.len()).collect());
        };
        names.iter().map(|n| find_case(ds, n)).collect()
    }
}

fn find_case(ds: &Dataset, name: &str) -> Result<usize> {
    ds.records
        .iter()
        .position(|r| r.name == name)
        .ok_or_else(|| Error::Invalid(format!("no case named {name}")))
}

fn case_names(ds: &Dataset, cases: &[usize]) -> Vec<String> {
    cases.iter().map(|&i| ds.records[i].name.clone()).collect()
}

fn cmd_train(data: &Path, cfg: &TrainRun, prior_ckpt: Option<&Path>, eval: bool, out: &Path) -> Result<()> {
    let ds = load_dataset(data)?;
    let encoded = encode_all(&ds.records, &ds.basis)?;
    let split = split_dataset(&ds.records, cfg.train.split_ratio, cfg.train.seed)?;
    let pool = select_pool(&ds.records, &split.train, &cfg.train);
    let pooling = default_pooling(&ds.basis, &cfg.net)?;
    let priors = match prior_ckpt {
        Some(p) => Some(steady_priors(p, &ds.basis, &encoded)?),
        None => None,
    };
    let tdata = TrainData {
        basis: &ds.basis,
        pooling: pooling.as_ref(),
        records: &ds.records,
        encoded: &encoded,
        priors: priors.as_deref(),
    };
    let model = ModelConfig::new(cfg.net.clone(), encoded[0].tokens.cols(), cfg.train.seed);
    let outcome = train(model, &tdata, &pool, &cfg.train)?;
    outcome.checkpoint.save(out.join("checkpoint.bin"))?;
    write_split(&ds, &split, &out.join("split.json"))?;
    let mut hist = String::from("epoch,lr,train_loss,val_mse\n");
    for h in &outcome.history {
        let val = h.val_mse.map_or(String::new(), |v| v.to_string());
        hist.push_str(&format!("{},{},{},{}\n", h.epoch, h.lr, h.train_loss, val));
    }
    write_text(&out.join("history.csv"), &hist)?;
    write_json(
        &out.join("train.json"),
        &json!({
            "best_epoch": outcome.best_epoch,
            "best_val_mse": outcome.best_val_mse,
            "steps": outcome.steps,
            "fit_cases": case_names(&ds, &outcome.fit_cases),
            "val_cases": case_names(&ds, &outcome.val_cases),
        }),
    )?;
    if eval {
        let test = &split.test;
        let pred = outcome.best.predict_all(&tdata, test)?;
        let truth: Vec<WssSeries> = test.iter().map(|&i| ds.records[i].labels.clone()).collect();
        let meshes: Vec<_> = test.iter().map(|&i| &ds.records[i].mesh).collect();
        let report = evaluate(&pred, &truth, &meshes, &cfg.eval)?;
        let dir = out.join("test");
        mkdir(&dir)?;
        report.save(&dir)?;
        println!("{}", summary_json(&report.summary_values()));
    }
    Ok(())
}

fn write_split(ds: &Dataset, split: &Split, path: &Path) -> Result<()> {
    let f = SplitFile {
        train: case_names(ds, &split.train),
        test: case_names(ds, &split.test),
    };
    write_json(path, &serde_json::to_value(f)?)
}

fn steady_priors(ckpt: &Path, basis: &GhdBasis, encoded: &[ghdwss::surrogates::CaseInputs]) -> Result<Vec<Tensor>> {
    let p = Predictor::restore(&Checkpoint::load(ckpt)?, basis)?;
    encoded.iter().map(|e| p.steady_prior(e)).collect()
}

fn predict_cases(ckpt: &Path, ds: &Dataset, cases: &[usize], prior_ckpt: Option<&Path>) -> Result<Vec<WssSeries>> {
    let p = Predictor::restore(&Checkpoint::load(ckpt)?, &ds.basis)?;
    let prior_model = match prior_ckpt {
        Some(c) => Some(Predictor::restore(&Checkpoint::load(c)?, &ds.basis)?),
        None => None,
    };
    cases
        .iter()
        .map(|&i| {
            let rec: &CaseRecord = &ds.records[i];
            let enc = encode_case(rec, &ds.basis)?;
            let prior = prior_model.as_ref().map(|m| m.steady_prior(&enc)).transpose()?;
            p.predict(&enc, rec, prior.as_ref())
        })
        .collect()
}

fn read_predictions(dir: &Path, ds: &Dataset, cases: &[usize]) -> Result<Vec<WssSeries>> {
    cases
        .iter()
        .map(|&i| {
            let r = &ds.records[i];
            let dt = r.waveform.as_ref().map_or(1.0, |w| w.dt());
            WssSeries::load(dir.join(&r.name).join("wss.bin"), dt)
        })
        .collect()
}

fn magnitudes(s: &WssSeries, t: usize) -> Vec<f64> {
    s.frame(t).magnitudes()
}

fn cmd_render(data: &Path, case: &str, pred: Option<&Path>, views: usize, size: usize, stride: usize, out: &Path) -> Result<()> {
    if stride == 0 {
        return Err(Error::Invalid("stride must be positive".into()));
    }
    let ds = load_dataset(data)?;
    let idx = find_case(&ds, case)?;
    let rec = &ds.records[idx];
    let predicted = match pred {
        Some(dir) => Some(read_predictions(dir, &ds, &[idx])?.remove(0)),
        None => None,
    };
    let renderer = Renderer::new(&rec.mesh, &default_views(views)?, size)?;
    let frames: Vec<usize> = (0..rec.num_frames()).step_by(stride).collect();
    let all: Vec<f64> = frames.iter().flat_map(|&t| magnitudes(&rec.labels, t)).collect();
    let (lo, hi) = min_max(&all);
    for &t in &frames {
        let truth = magnitudes(&rec.labels, t);
        let p = predicted.as_ref().map(|s| magnitudes(s, t));
        side_by_side(&renderer, &truth, p.as_deref(), lo, hi, out, &format!("frame_{t:03}"))?;
    }
    if rec.num_frames() >= 2 {
        let h_true = derive_hemo(&rec.labels)?;
        let h_pred = predicted.as_ref().map(derive_hemo).transpose()?;
        let scalar = |f: &ghdwss::mesh::ScalarField| f.values.iter().map(|v| v[0]).collect::<Vec<f64>>();
        for (field, tf, pf) in [
            ("tawss", scalar(&h_true.tawss), h_pred.as_ref().map(|h| scalar(&h.tawss))),
            ("osi", scalar(&h_true.osi), h_pred.as_ref().map(|h| scalar(&h.osi))),
            ("rrt", scalar(&h_true.rrt), h_pred.as_ref().map(|h| scalar(&h.rrt))),
        ] {
            let finite: Vec<f64> = match field {
                "rrt" => tf
                    .iter()
                    .zip(&h_true.rrt_clamped)
                    .filter(|(_, &c)| !c)
                    .map(|(v, _)| *v)
                    .collect(),
                _ => tf.clone(),
            };
            let (lo, hi) = min_max(&finite);
            side_by_side(&renderer, &tf, pf.as_deref(), lo, hi, out, field)?;
        }
    } else {
        log::warn!("{case} is steady; skipping TAWSS/OSI/RRT maps");
    }
    Ok(())
}

/// Ground truth on the left, prediction (if any) on the right, one PNG per view.
fn side_by_side(r: &Renderer, truth: &[f64], pred: Option<&[f64]>, lo: f64, hi: f64, out: &Path, stem: &str) -> Result<()> {
    for v in 0..r.num_views() {
        let a = r.image(v, truth, lo, hi)?;
        let img = match pred {
            Some(p) => Image::hstack(&[&a, &r.image(v, p, lo, hi)?])?,
            None => a,
        };
        img.save_png(out.join(format!("{stem}_v{v}.png")))?;
    }
    Ok(())
}

fn summary_json(v: &[f64; 5]) -> Value {
    let num = |x: f64| if x.is_finite() { json!(x) } else { Value::Null };
    json!({ "mse": num(v[0]), "ssim": num(v[1]), "ssim_r": num(v[2]), "rl2": num(v[3]), "rl2_star": num(v[4]) })
}

fn set<T>(slot: &mut T, v: Option<T>) {
    if let Some(v) = v {
        *slot = v;
    }
}

fn load_basis(dir: &Path) -> Result<GhdBasis> {
    let canonical = load_mesh(dir.join("canonical.obj"))?;
    GhdBasis::load(dir.join("basis.bin"), &canonical)
}

fn load_config<T: DeserializeOwned + Default>(path: Option<&Path>) -> Result<T> {
    match path {
        Some(p) => read_json(p),
        None => Ok(T::default()),
    }
}

fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let s = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(serde_json::from_str(&s)?)
}

fn write_json(path: &Path, v: &Value) -> Result<()> {
    write_text(path, &serde_json::to_string_pretty(v)?)
}

fn write_text(path: &Path, s: &str) -> Result<()> {
    std::fs::write(path, s).map_err(|e| Error::io(path, e))
}

fn mkdir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}
