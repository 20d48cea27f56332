//! Sparse matrices and the symmetric eigensolver.

pub mod eigen;
pub mod sparse;

pub use eigen::{smallest_eigenpairs, EigenOptions, EigenPairs};
pub use sparse::CsrMatrix;
