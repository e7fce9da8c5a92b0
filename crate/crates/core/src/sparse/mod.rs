//! Sparse matrices, Cholesky factorization and selected inversion.

mod cholesky;
mod matrix;
mod takahashi;

pub use cholesky::{factorize, CholSymbolic, SparseChol};
pub use matrix::CsrMatrix;
pub use takahashi::{takahashi, SelectedInverse};
