//! Block Krylov constructions over a diffusion operator.
//!
//! For an operator `L` and a block vector `X` (N×F), the order-`m` block
//! Krylov matrix is `[X, LX, …, L^{m−1}X]`. Any analytic filter applied to
//! `X` lies in its column span once `m` reaches the grade of `(L, X)`, so a
//! learnable `mF×O` weight on this matrix covers every such filter.

use crate::error::{shape_err, Result};
use crate::linalg::{gemm_tn, numerical_rank, DenseMatrix, SparseMatrix};

/// The blocks `X, LX, …, L^{m−1}X` kept separately.
#[derive(Debug, Clone)]
pub struct BlockKrylovBasis {
    pub blocks: Vec<DenseMatrix>,
}

impl BlockKrylovBasis {
    /// Successive products with `L`; powers of `L` are never formed.
    pub fn new(l: &SparseMatrix, x: &DenseMatrix, m: usize) -> Result<Self> {
        if m == 0 {
            return shape_err("block Krylov order must be at least 1");
        }
        if l.cols() != x.rows() || l.rows() != l.cols() {
            return shape_err(format!(
                "operator {}x{} incompatible with block vector {}x{}",
                l.rows(),
                l.cols(),
                x.rows(),
                x.cols()
            ));
        }
        let mut blocks = Vec::with_capacity(m);
        blocks.push(x.clone());
        for j in 1..m {
            let next = l.spmm(&blocks[j - 1])?;
            blocks.push(next);
        }
        Ok(Self { blocks })
    }

    pub fn m(&self) -> usize {
        self.blocks.len()
    }

    /// Concatenation `N × (mF)`.
    pub fn matrix(&self) -> DenseMatrix {
        let refs: Vec<&DenseMatrix> = self.blocks.iter().collect();
        DenseMatrix::hstack(&refs).expect("blocks share the row count")
    }
}

/// `[X, LX, …, L^{m−1}X]`.
pub fn block_krylov_matrix(l: &SparseMatrix, x: &DenseMatrix, m: usize) -> Result<DenseMatrix> {
    Ok(BlockKrylovBasis::new(l, x, m)?.matrix())
}

/// Classical block inner product `XᵀY`.
pub fn classical_block_inner(x: &DenseMatrix, y: &DenseMatrix) -> Result<DenseMatrix> {
    if x.shape() != y.shape() {
        return shape_err(format!(
            "block inner product of {}x{} and {}x{}",
            x.rows(),
            x.cols(),
            y.rows(),
            y.cols()
        ));
    }
    gemm_tn(x, y)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct KrylovGrade {
    pub m: usize,
    /// False when the rank was still growing at `max_m`.
    pub stabilized: bool,
}

/// Smallest `m ≤ max_m` with `rank K_{m+1} = rank K_m`.
///
/// `tol` is passed to [`numerical_rank`]; `None` selects its default
/// threshold.
pub fn krylov_grade(
    l: &SparseMatrix,
    x: &DenseMatrix,
    max_m: usize,
    tol: Option<f64>,
) -> Result<KrylovGrade> {
    let max_m = max_m.max(1);
    let basis = BlockKrylovBasis::new(l, x, max_m + 1)?;
    let mut prev = numerical_rank(&basis.blocks[0], tol)?;
    for m in 1..=max_m {
        let refs: Vec<&DenseMatrix> = basis.blocks[..=m].iter().collect();
        let rank = numerical_rank(&DenseMatrix::hstack(&refs)?, tol)?;
        if rank == prev {
            return Ok(KrylovGrade {
                m,
                stabilized: true,
            });
        }
        prev = rank;
    }
    Ok(KrylovGrade {
        m: max_m,
        stabilized: false,
    })
}
