//! Surrogate models mapping encoded geometry and inflow to surface WSS.
//!
//! All families share the autograd substrate and one [`ParamStore`]. The
//! waveform encoder is trained jointly with whichever network consumes it.

pub mod checkpoint;
pub mod gps;
pub mod model;
pub mod series;
pub mod spectral;
pub mod unet;

use crate::autograd::Tensor;
use crate::encoding::EncodingBundle;
use crate::error::{Error, Result};

pub use checkpoint::{Checkpoint, CheckpointHeader};
pub use gps::{global_attention, gps_forward, local_mp, GlobalAttention, GpsBlock, GpsConfig, GpsModel, LocalMp};
pub use model::{Frame, ModelConfig, ModelContext, NetConfig, Surrogate};
pub use series::WssSeries;
pub use spectral::{project_coefficients, reconstruct_field, SpectralConfig, SpectralSurrogate};
pub use unet::{ChebConv, GraphUNet, SequenceUNet, UNetConfig, UNetTopology};

/// Which node-feature groups a model consumes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(default)]
pub struct FeatureSet {
    /// Canonical-basis modes, their gradients and eigenvalues.
    pub ghd: bool,
    /// Case-specific Laplacian eigenvectors, gradients and eigenvalues.
    pub case_laplacian: bool,
}

impl Default for FeatureSet {
    fn default() -> Self {
        FeatureSet {
            ghd: true,
            case_laplacian: true,
        }
    }
}

impl FeatureSet {
    /// Column indices into the concatenated `[pe | se | other]` matrix.
    pub fn columns(&self) -> Vec<usize> {
        use crate::encoding::{I_TRUNC, J_TRUNC, PE_WIDTH, SE_WIDTH, OTHER_WIDTH};
        let mut cols = Vec::new();
        let grad0 = I_TRUNC + J_TRUNC;
        if self.ghd {
            cols.extend(0..I_TRUNC);
            cols.extend(grad0..grad0 + 3 * I_TRUNC);
            cols.extend(PE_WIDTH..PE_WIDTH + I_TRUNC);
        }
        if self.case_laplacian {
            cols.extend(I_TRUNC..grad0);
            cols.extend(grad0 + 3 * I_TRUNC..PE_WIDTH);
            cols.extend(PE_WIDTH + I_TRUNC..PE_WIDTH + SE_WIDTH);
        }
        let o = PE_WIDTH + SE_WIDTH;
        cols.extend(o..o + OTHER_WIDTH);
        cols.sort_unstable();
        cols
    }

    pub fn width(&self) -> usize {
        self.columns().len()
    }
}

/// Graph-side model inputs for one case, already normalized.
#[derive(Debug, Clone)]
pub struct CaseInputs {
    /// `N x 128`, `[pe | se | other]`.
    pub node_feat: Tensor,
    pub src: Vec<usize>,
    pub dst: Vec<usize>,
    /// `E x 4`.
    pub edge_feat: Tensor,
    /// `1 x 3n` flattened GHD tokens.
    pub tokens: Tensor,
    /// `C x T` waveform derivative stack; `None` for steady cases.
    pub wave: Option<Tensor>,
}

impl CaseInputs {
    pub fn from_bundle(bundle: &EncodingBundle, tokens: &[f64], wave: Option<Tensor>) -> Self {
        let n = bundle.num_nodes();
        let pe = &bundle.node_pe;
        let se = &bundle.node_se;
        let ot = &bundle.node_other;
        let w = pe.cols() + se.cols() + ot.cols();
        let mut node_feat = Tensor::zeros(n, w);
        for v in 0..n {
            let row = node_feat.row_mut(v);
            row[..pe.cols()].copy_from_slice(pe.row(v));
            row[pe.cols()..pe.cols() + se.cols()].copy_from_slice(se.row(v));
            row[pe.cols() + se.cols()..].copy_from_slice(ot.row(v));
        }
        CaseInputs {
            node_feat,
            src: bundle.edges.iter().map(|e| e[0]).collect(),
            dst: bundle.edges.iter().map(|e| e[1]).collect(),
            edge_feat: bundle.edge_feat.clone(),
            tokens: Tensor::row_vector(tokens.to_vec()),
            wave,
        }
    }

    pub fn num_nodes(&self) -> usize {
        self.node_feat.rows()
    }

    /// Number of frames of the attached waveform, 1 when steady.
    pub fn num_frames(&self) -> usize {
        self.wave.as_ref().map_or(1, |w| w.cols())
    }

    /// Node features restricted to `cols`.
    pub fn select(&self, cols: &[usize]) -> Result<Tensor> {
        if let Some(&c) = cols.iter().find(|&&c| c >= self.node_feat.cols()) {
            return Err(Error::OutOfRange {
                index: c,
                len: self.node_feat.cols(),
            });
        }
        Ok(select_columns(&self.node_feat, cols))
    }
}

pub(crate) fn select_columns(t: &Tensor, cols: &[usize]) -> Tensor {
    Tensor::from_fn(t.rows(), cols.len(), |r, c| t.get(r, cols[c]))
}

/// Relabel nodes of `inputs` so that new node `i` is old node `perm[i]`.
pub fn permute_inputs(inputs: &CaseInputs, perm: &[usize]) -> CaseInputs {
    let mut inv = vec![0; perm.len()];
    for (new, &old) in perm.iter().enumerate() {
        inv[old] = new;
    }
    CaseInputs {
        node_feat: Tensor::from_fn(perm.len(), inputs.node_feat.cols(), |r, c| inputs.node_feat.get(perm[r], c)),
        src: inputs.src.iter().map(|&s| inv[s]).collect(),
        dst: inputs.dst.iter().map(|&d| inv[d]).collect(),
        edge_feat: inputs.edge_feat.clone(),
        tokens: inputs.tokens.clone(),
        wave: inputs.wave.clone(),
    }
}

#[cfg(test)]
pub(crate) mod fixtures {
    use super::*;
    use crate::encoding::{case_eigs, encode_geometry, waveform_derivatives, CoordStats, Waveform};
    use crate::mesh::primitives;
    use crate::spectral::{compute_basis, reconstruct, GhdBasis, GhdTokens};

    pub struct Fixture {
        pub basis: GhdBasis,
        pub inputs: CaseInputs,
    }

    /// icosphere(1), 42 nodes, with a lumpy GHD shape and a short waveform.
    pub fn small_case(seed: u64, frames: usize) -> Fixture {
        let canon = primitives::icosphere(1);
        let basis = compute_basis(&canon, 20).unwrap();
        let mut tokens: GhdTokens = crate::spectral::fit_tokens(&basis, &canon, &Default::default()).unwrap().tokens;
        let r = crate::autograd::check::random_tensor(20, 3, seed);
        for i in 4..20 {
            for k in 0..3 {
                tokens.coeffs_mut()[i][k] += 0.05 * r.get(i, k);
            }
        }
        let mesh = reconstruct(&basis, &tokens).unwrap();
        let eigs = case_eigs(&mesh).unwrap();
        let bundle = encode_geometry(&mesh, &basis, &eigs, &CoordStats::default()).unwrap();
        let samples: Vec<f64> = (0..frames)
            .map(|i| 1.0 + 0.5 * (std::f64::consts::TAU * i as f64 / frames as f64 + seed as f64).sin())
            .collect();
        let wf = Waveform::new(samples, 1.0).unwrap();
        let mut stack = waveform_derivatives(&wf, 2);
        // keep derivative channels O(1)
        for (k, row) in stack.data_mut().chunks_mut(frames).enumerate() {
            let s = std::f64::consts::TAU.powi(k as i32);
            row.iter_mut().for_each(|x| *x /= s);
        }
        let mut inputs = CaseInputs::from_bundle(&bundle, &tokens.flat(), Some(stack));
        // scale eigenvector columns up to O(1)
        let sn = (mesh.num_vertices() as f64).sqrt();
        for r in 0..inputs.node_feat.rows() {
            for c in 0..crate::encoding::PE_WIDTH {
                let x = inputs.node_feat.get(r, c);
                inputs.node_feat.set(r, c, x * sn * 0.3);
            }
        }
        Fixture { basis, inputs }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn feature_set_widths() {
        let all = FeatureSet::default();
        assert_eq!(all.width(), 128);
        let none = FeatureSet {
            ghd: false,
            case_laplacian: false,
        };
        assert_eq!(none.columns(), (120..128).collect::<Vec<_>>());
        let ghd = FeatureSet {
            ghd: true,
            case_laplacian: false,
        };
        assert_eq!(ghd.width(), 8 + 24 + 8 + 8);
    }

    #[test]
    fn inputs_from_bundle_layout() {
        let f = fixtures::small_case(1, 16);
        assert_eq!(f.inputs.node_feat.cols(), 128);
        assert_eq!(f.inputs.src.len(), f.inputs.dst.len());
        assert_eq!(f.inputs.num_frames(), 16);
        assert!(f.inputs.select(&[200]).is_err());
    }
}
