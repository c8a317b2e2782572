//! Dense and sparse kernels, numerical rank, and symmetric eigensolvers.
//!
//! Every kernel is single-threaded with a fixed summation order, so repeated
//! calls on the same inputs are bitwise identical.

mod activation;
mod dense;
mod eigen;
mod rank;
mod sparse;

pub use activation::Activation;
pub use dense::{gemm, gemm_acc, gemm_nt, gemm_nt_acc, gemm_tn, gemm_tn_acc, DenseMatrix, MatRef};
pub use eigen::{
    lanczos, spectral_density, spectrum, symmetric_eigen, symmetric_eigenvalues,
    tridiagonal_eigen, SpectrumMethod, Tridiagonal, DENSE_EIGEN_LIMIT,
};
pub use rank::{default_rank_tolerance, numerical_rank, singular_values};
pub use sparse::SparseMatrix;

/// `s · x`, the sparse-dense product.
pub fn spmm(s: &SparseMatrix, x: &DenseMatrix) -> crate::Result<DenseMatrix> {
    s.spmm(x)
}
