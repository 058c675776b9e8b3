//! Sparse and dense matrices, factorizations and eigensolvers.

pub mod banded;
pub mod dense;
pub mod eigen;
pub mod sparse;

pub use banded::{shifted_is_positive_definite, smallest_eigenvalue_bisection, BandedLu};
pub use dense::{Cholesky, DenseLu, DenseMatrix};
pub use eigen::{generalized_sym_eig, symmetric_eig, symmetric_eigenvalues, EigenPairs};
pub use sparse::{block2x2, SparseMatrix, TripletBuilder};
