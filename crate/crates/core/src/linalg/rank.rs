use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::linalg::DenseMatrix;

const SVD_MAX_ITER: usize = 10_000;

/// Singular values in descending order.
pub fn singular_values(x: &DenseMatrix) -> Result<Vec<f64>> {
    let (rows, cols) = x.shape();
    if rows == 0 || cols == 0 {
        return Ok(Vec::new());
    }
    let m = DMatrix::from_row_slice(rows, cols, x.as_slice());
    let m = if rows >= cols { m } else { m.transpose() };
    // Tall inputs are reduced to their triangular factor first; R has the
    // same singular values and the bidiagonal stage then runs on cols×cols.
    let m = if m.nrows() > 2 * m.ncols() {
        m.qr().r()
    } else {
        m
    };
    let svd = nalgebra::linalg::SVD::try_new(m, false, false, f64::EPSILON, SVD_MAX_ITER)
        .ok_or_else(|| Error::Numerical("SVD did not converge".into()))?;
    let mut s: Vec<f64> = svd.singular_values.iter().copied().collect();
    s.sort_by(|a, b| b.total_cmp(a));
    Ok(s)
}

/// Default threshold `max(rows, cols) · ε · σ₁`.
pub fn default_rank_tolerance(rows: usize, cols: usize, sigma_max: f64) -> f64 {
    rows.max(cols) as f64 * f64::EPSILON * sigma_max
}

/// Number of singular values strictly above `tol`, or above the default
/// threshold when `tol` is `None`. The zero matrix has rank 0.
pub fn numerical_rank(x: &DenseMatrix, tol: Option<f64>) -> Result<usize> {
    if !x.is_finite() {
        return Err(Error::Numerical("numerical_rank of non-finite matrix".into()));
    }
    let s = singular_values(x)?;
    let Some(&sigma_max) = s.first() else {
        return Ok(0);
    };
    if sigma_max == 0.0 {
        return Ok(0);
    }
    let tau = tol.unwrap_or_else(|| default_rank_tolerance(x.rows(), x.cols(), sigma_max));
    Ok(s.iter().filter(|&&v| v > tau).count())
}
