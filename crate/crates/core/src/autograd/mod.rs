//! Minimal reverse-mode automatic differentiation on 2-d `f64` tensors.
//!
//! A [`Graph`] records one forward pass; parameters live in a
//! [`ParamStore`] and are bound into each graph as leaves.

pub mod check;
mod graph;
pub mod layers;
mod params;
mod tensor;

pub use graph::{Gradients, Graph, Var};
pub use layers::{LayerNorm, Linear, Mlp};
pub use params::{AdamW, ManifestEntry, ParamId, ParamStore};
pub use tensor::Tensor;
