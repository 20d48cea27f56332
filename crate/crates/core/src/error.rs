use std::path::PathBuf;

use thiserror::Error;

/// Errors raised anywhere in the pipeline.
///
/// Variants are grouped so the CLI can map them onto exit codes:
/// validation problems (bad input, bad shapes, bad config) versus
/// numerical failures (non-convergence, NaN losses, divergence).
#[derive(Debug, Error)]
pub enum Error {
    #[error("io error at {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("empty mesh")]
    EmptyMesh,

    #[error("non-manifold edge #{edge} ({a}, {b}) shared by {faces} faces")]
    NonManifoldEdge {
        edge: usize,
        a: usize,
        b: usize,
        faces: usize,
    },

    #[error("degenerate face #{face}: {reason}")]
    DegenerateFace { face: usize, reason: String },

    #[error("isolated vertex {0}")]
    IsolatedVertex(usize),

    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("index {index} out of range (len {len})")]
    OutOfRange { index: usize, len: usize },

    #[error("eigensolver did not converge after {iterations} iterations (max residual {residual:.3e})")]
    EigenNotConverged { iterations: usize, residual: f64 },

    #[error("token fit diverged at iteration {iteration} (residual {residual:.3e})")]
    FitDiverged { iteration: usize, residual: f64 },

    #[error("non-finite loss at step {step} (lr {lr:.3e}, case {case})")]
    NanLoss { step: usize, lr: f64, case: String },

    #[error("rejection sampling exhausted after {0} tries")]
    RejectionCap(usize),

    #[error("serialization: {0}")]
    Serde(#[from] serde_json::Error),

    #[error("image: {0}")]
    Image(String),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for failures of a numerical procedure rather than of the input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::EigenNotConverged { .. }
                | Error::FitDiverged { .. }
                | Error::NanLoss { .. }
                | Error::RejectionCap(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
