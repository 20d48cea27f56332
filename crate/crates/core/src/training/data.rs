use std::path::Path;

use rand::seq::SliceRandom;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::encoding::waveform::DEFAULT_DERIVATIVE_ORDER;
use crate::encoding::{case_eigs, encode_geometry, waveform_derivatives, CoordStats, Waveform};
use crate::error::{Error, Result};
use crate::mesh::obj::load_mesh;
use crate::mesh::TriMesh;
use crate::spectral::{GhdBasis, GhdTokens};
use crate::surrogates::{CaseInputs, Frame, WssSeries};
use crate::synth::{load_manifest, CaseKind, DatasetManifest, SynthCase};

/// One training or test case.
#[derive(Debug, Clone)]
pub struct CaseRecord {
    pub name: String,
    pub kind: CaseKind,
    pub tokens: GhdTokens,
    pub mesh: TriMesh,
    pub waveform: Option<Waveform>,
    pub labels: WssSeries,
}

impl CaseRecord {
    pub fn new(
        name: String,
        tokens: GhdTokens,
        mesh: TriMesh,
        waveform: Option<Waveform>,
        labels: WssSeries,
    ) -> Result<Self> {
        if labels.num_nodes() != mesh.num_vertices() {
            return Err(Error::Shape(format!(
                "{name}: labels have {} nodes, mesh has {}",
                labels.num_nodes(),
                mesh.num_vertices()
            )));
        }
        let kind = match &waveform {
            None if labels.num_frames() == 1 => CaseKind::Steady,
            Some(w) if w.len() == labels.num_frames() => CaseKind::Transient,
            _ => {
                return Err(Error::Shape(format!(
                    "{name}: {} label frames do not match the waveform",
                    labels.num_frames()
                )))
            }
        };
        Ok(CaseRecord {
            name,
            kind,
            tokens,
            mesh,
            waveform,
            labels,
        })
    }

    pub fn num_frames(&self) -> usize {
        self.labels.num_frames()
    }
}

impl From<SynthCase> for CaseRecord {
    fn from(c: SynthCase) -> Self {
        CaseRecord {
            name: c.name,
            kind: c.kind,
            tokens: c.tokens,
            mesh: c.mesh,
            waveform: c.waveform,
            labels: c.labels,
        }
    }
}

/// A generated dataset read back from disk.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub manifest: DatasetManifest,
    pub basis: GhdBasis,
    pub records: Vec<CaseRecord>,
}

pub fn load_case(dir: &Path, name: &str, kind: CaseKind) -> Result<CaseRecord> {
    let cdir = dir.join(name);
    let mesh = load_mesh(cdir.join("mesh.obj"))?;
    let tokens = GhdTokens::load(cdir.join("tokens.json"))?;
    let waveform = match kind {
        CaseKind::Steady => None,
        CaseKind::Transient => Some(Waveform::load_csv(cdir.join("waveform.csv"))?),
    };
    let dt = waveform.as_ref().map_or(1.0, |w| w.dt());
    let labels = WssSeries::load(cdir.join("wss.bin"), dt)?;
    CaseRecord::new(name.to_string(), tokens, mesh, waveform, labels)
}

pub fn load_dataset(dir: impl AsRef<Path>) -> Result<Dataset> {
    let dir = dir.as_ref();
    let manifest = load_manifest(dir)?;
    let canonical = load_mesh(dir.join("canonical.obj"))?;
    let basis = GhdBasis::load(dir.join("basis.bin"), &canonical)?;
    let records = manifest
        .cases
        .par_iter()
        .map(|c| load_case(dir, &c.name, c.kind))
        .collect::<Result<_>>()?;
    Ok(Dataset {
        manifest,
        basis,
        records,
    })
}

/// Unnormalized model inputs of one case. Coordinates are centred and scaled
/// by the canonical mesh so the encoding does not depend on the split.
pub fn encode_case(record: &CaseRecord, basis: &GhdBasis) -> Result<CaseInputs> {
    let stats = CoordStats::from_meshes([basis.canonical()]);
    let eigs = case_eigs(&record.mesh)?;
    let bundle = encode_geometry(&record.mesh, basis, &eigs, &stats)?;
    let wave = record
        .waveform
        .as_ref()
        .map(|w| waveform_derivatives(w, DEFAULT_DERIVATIVE_ORDER));
    Ok(CaseInputs::from_bundle(&bundle, &record.tokens.flat(), wave))
}

pub fn encode_all(records: &[CaseRecord], basis: &GhdBasis) -> Result<Vec<CaseInputs>> {
    records.par_iter().map(|r| encode_case(r, basis)).collect()
}

/// Disjoint train/test case indices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Split {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

fn split_group(mut idx: Vec<usize>, ratio: f64, rng: &mut ChaCha8Rng) -> (Vec<usize>, Vec<usize>) {
    idx.shuffle(rng);
    let n = idx.len();
    let n_train = if n < 2 {
        n
    } else {
        ((ratio * n as f64).round() as usize).clamp(1, n - 1)
    };
    let test = idx.split_off(n_train);
    (idx, test)
}

/// Shuffle and split each kind separately; `ratio` is the train fraction.
pub fn split_dataset(cases: &[CaseRecord], ratio: f64, seed: u64) -> Result<Split> {
    split_kinds(&cases.iter().map(|c| c.kind).collect::<Vec<_>>(), ratio, seed)
}

pub fn split_kinds(kinds: &[CaseKind], ratio: f64, seed: u64) -> Result<Split> {
    if kinds.len() < 2 {
        return Err(Error::Invalid("need at least 2 cases to split".into()));
    }
    if !(ratio > 0.0 && ratio < 1.0) {
        return Err(Error::Invalid(format!("split ratio {ratio} must lie in (0, 1)")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut split = Split {
        train: Vec::new(),
        test: Vec::new(),
    };
    for kind in [CaseKind::Steady, CaseKind::Transient] {
        let idx: Vec<usize> = (0..kinds.len()).filter(|&i| kinds[i] == kind).collect();
        let (tr, te) = split_group(idx, ratio, &mut rng);
        split.train.extend(tr);
        split.test.extend(te);
    }
    if split.train.is_empty() || split.test.is_empty() {
        return Err(Error::Invalid("split leaves an empty partition".into()));
    }
    Ok(split)
}

/// One supervised item: a case and the frame to predict.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BatchItem {
    pub case: usize,
    pub frame: Frame,
}

/// Mixed steady/transient batch sampler over a fixed pool of cases.
#[derive(Debug, Clone)]
pub struct Sampler {
    steady: Vec<usize>,
    transient: Vec<(usize, usize)>,
    p_steady: f64,
    batch: usize,
}

impl Sampler {
    /// `steady_ratio` is steady:transient items per batch on average; it
    /// is ignored without augmentation.
    pub fn new(records: &[CaseRecord], pool: &[usize], batch: usize, augment: bool, steady_ratio: f64) -> Result<Self> {
        if batch == 0 || !(steady_ratio > 0.0) {
            return Err(Error::Invalid("batch size and steady ratio must be positive".into()));
        }
        let steady: Vec<usize> = pool.iter().copied().filter(|&i| records[i].kind == CaseKind::Steady).collect();
        let transient: Vec<(usize, usize)> = pool
            .iter()
            .copied()
            .filter(|&i| records[i].kind == CaseKind::Transient)
            .map(|i| (i, records[i].num_frames()))
            .collect();
        if augment && steady.is_empty() {
            return Err(Error::Invalid("augmentation needs steady cases".into()));
        }
        let p_steady = match (augment, transient.is_empty()) {
            (false, true) => return Err(Error::Invalid("no transient cases to train on".into())),
            (false, false) => 0.0,
            (true, true) => 1.0,
            (true, false) => steady_ratio / (1.0 + steady_ratio),
        };
        Ok(Sampler {
            steady,
            transient,
            p_steady,
            batch,
        })
    }

    pub fn p_steady(&self) -> f64 {
        self.p_steady
    }

    pub fn batch(&self, rng: &mut impl Rng) -> Vec<BatchItem> {
        (0..self.batch)
            .map(|_| {
                if rng.gen::<f64>() < self.p_steady {
                    BatchItem {
                        case: self.steady[rng.gen_range(0..self.steady.len())],
                        frame: Frame::Steady,
                    }
                } else {
                    let (case, t) = self.transient[rng.gen_range(0..self.transient.len())];
                    BatchItem {
                        case,
                        frame: Frame::At(rng.gen_range(0..t)),
                    }
                }
            })
            .collect()
    }
}

pub fn sample_batch(
    records: &[CaseRecord],
    pool: &[usize],
    batch: usize,
    augment: bool,
    steady_ratio: f64,
    rng: &mut impl Rng,
) -> Result<Vec<BatchItem>> {
    Ok(Sampler::new(records, pool, batch, augment, steady_ratio)?.batch(rng))
}
