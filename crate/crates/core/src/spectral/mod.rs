//! Canonical-mesh eigenbasis, shape tokens and the pooling hierarchy.

pub mod basis;
pub mod pooling;
pub mod tokens;

pub use basis::{compute_basis, compute_basis_with, mesh_checksum, GhdBasis};
pub use pooling::{build_pooling, pool, unpool, PoolingLevel, PoolingMap};
pub use tokens::{fit_tokens, reconstruct, FitOptions, FitResult, GhdTokens};
