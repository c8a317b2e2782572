//! Spectrum-free graph convolution in block Krylov form.
//!
//! The crate provides the numerical building blocks (CSR operators, dense
//! kernels, numerical rank, symmetric eigensolvers), the block Krylov
//! constructions, three network families with hand-written reverse mode
//! (vanilla deep GCN, snowball, truncated block Krylov), a full-batch
//! semi-supervised trainer, and the experiment drivers for rank traces,
//! operator spectra and accuracy grids.

pub mod config;
pub mod dataset;
pub mod error;
pub mod experiments;
pub mod graph;
pub mod krylov;
pub mod linalg;
pub mod nn;
pub mod rng;
pub mod selftest;
pub mod training;

pub use error::{Error, Result};
pub use linalg::{Activation, DenseMatrix, SparseMatrix};
