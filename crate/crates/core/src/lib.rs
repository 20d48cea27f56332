//! Spectral shape encoding, graph surrogates and hemodynamic metrics for
//! predicting pulsatile wall shear stress on vessel surface meshes.

pub mod autograd;
pub mod encoding;
pub mod error;
pub mod linalg;
pub mod mesh;
pub mod metrics;
pub mod spectral;
pub mod surrogates;
pub mod synth;
pub mod training;

pub use error::{Error, Result};
