use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::oracle::{oracle_steady, oracle_wss, OracleParams};
use super::shapes::{make_canonical, sample_shape, AmplitudeSchedule, Resolution};
use crate::encoding::Waveform;
use crate::error::{Error, Result};
use crate::mesh::obj::{save_mesh, to_obj_string};
use crate::mesh::TriMesh;
use crate::spectral::{compute_basis, mesh_checksum, reconstruct, GhdBasis, GhdTokens};
use crate::surrogates::WssSeries;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CaseKind {
    Steady,
    Transient,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GenConfig {
    pub steady: usize,
    pub transient: usize,
    pub frames: usize,
    pub resolution: Resolution,
    pub modes: usize,
    pub amplitude: AmplitudeSchedule,
    pub oracle: OracleParams,
    pub seed: u64,
}

impl Default for GenConfig {
    fn default() -> Self {
        GenConfig {
            steady: 2000,
            transient: 100,
            frames: 64,
            resolution: Resolution::Coarse,
            modes: 64,
            amplitude: AmplitudeSchedule::default(),
            oracle: OracleParams::default(),
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaseEntry {
    pub name: String,
    pub kind: CaseKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub config: GenConfig,
    pub basis_checksum: String,
    pub cases: Vec<CaseEntry>,
}

/// One generated case held in memory.
#[derive(Debug, Clone)]
pub struct SynthCase {
    pub name: String,
    pub kind: CaseKind,
    pub tokens: GhdTokens,
    pub mesh: TriMesh,
    pub waveform: Option<Waveform>,
    pub labels: WssSeries,
}

fn case_seed(seed: u64, index: usize) -> u64 {
    seed ^ (index as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

pub fn case_name(index: usize) -> String {
    format!("case_{index:04}")
}

/// Canonical mesh and its basis for a config.
pub fn build_basis(cfg: &GenConfig) -> Result<GhdBasis> {
    compute_basis(&make_canonical(cfg.resolution), cfg.modes)
}

/// Case `index`; indices below `cfg.steady` are steady.
pub fn generate_case(basis: &GhdBasis, cfg: &GenConfig, index: usize) -> Result<SynthCase> {
    if index >= cfg.steady + cfg.transient {
        return Err(Error::OutOfRange {
            index,
            len: cfg.steady + cfg.transient,
        });
    }
    let seed = case_seed(cfg.seed, index);
    let tokens = sample_shape(basis, seed, &cfg.amplitude)?;
    let mesh = reconstruct(basis, &tokens)?;
    let (kind, waveform, labels) = if index < cfg.steady {
        let f = oracle_steady(&mesh, &cfg.oracle)?;
        (CaseKind::Steady, None, WssSeries::steady(f)?)
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(seed.rotate_left(17));
        let w = cfg.oracle.template.randomized(&mut rng).sample(cfg.frames)?;
        let labels = oracle_wss(&mesh, &w, &cfg.oracle)?;
        (CaseKind::Transient, Some(w), labels)
    };
    Ok(SynthCase {
        name: case_name(index),
        kind,
        tokens,
        mesh,
        waveform,
        labels,
    })
}

/// All cases in memory, in index order.
pub fn generate_all(basis: &GhdBasis, cfg: &GenConfig) -> Result<Vec<SynthCase>> {
    (0..cfg.steady + cfg.transient)
        .into_par_iter()
        .map(|i| generate_case(basis, cfg, i))
        .collect()
}

fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let tmp = path.with_extension("tmp");
    std::fs::write(&tmp, bytes).map_err(|e| Error::io(&tmp, e))?;
    std::fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

fn write_case(dir: &Path, case: &SynthCase) -> Result<()> {
    let cdir = dir.join(&case.name);
    std::fs::create_dir_all(&cdir).map_err(|e| Error::io(&cdir, e))?;
    write_atomic(&cdir.join("mesh.obj"), to_obj_string(&case.mesh).as_bytes())?;
    write_atomic(&cdir.join("tokens.json"), case.tokens.to_json()?.as_bytes())?;
    if let Some(w) = &case.waveform {
        write_atomic(&cdir.join("waveform.csv"), w.to_csv_string().as_bytes())?;
    }
    let mut buf = Vec::new();
    case.labels.write_to(&mut buf)?;
    write_atomic(&cdir.join("wss.bin"), &buf)
}

/// Write `canonical.obj`, `basis.bin`, `dataset.json` and one directory per case.
pub fn gen_dataset(cfg: &GenConfig, out: impl AsRef<Path>) -> Result<DatasetManifest> {
    if cfg.steady + cfg.transient == 0 || cfg.frames < 8 {
        return Err(Error::Invalid("need at least one case and 8 frames".into()));
    }
    let out = out.as_ref();
    std::fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    let basis = build_basis(cfg)?;
    save_mesh(basis.canonical(), out.join("canonical.obj"))?;
    basis.save(out.join("basis.bin"))?;
    let cases: Vec<CaseEntry> = (0..cfg.steady + cfg.transient)
        .into_par_iter()
        .map(|i| {
            let c = generate_case(&basis, cfg, i)?;
            write_case(out, &c)?;
            Ok(CaseEntry { name: c.name, kind: c.kind })
        })
        .collect::<Result<_>>()?;
    let manifest = DatasetManifest {
        config: cfg.clone(),
        basis_checksum: mesh_checksum(basis.canonical()),
        cases,
    };
    write_atomic(&out.join("dataset.json"), serde_json::to_string_pretty(&manifest)?.as_bytes())?;
    Ok(manifest)
}

pub fn load_manifest(dir: impl AsRef<Path>) -> Result<DatasetManifest> {
    let p: PathBuf = dir.as_ref().join("dataset.json");
    let s = std::fs::read_to_string(&p).map_err(|e| Error::io(&p, e))?;
    Ok(serde_json::from_str(&s)?)
}
