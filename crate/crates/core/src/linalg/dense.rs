use serde::{Deserialize, Serialize};

use crate::error::{shape_err, Error, Result};

/// Row-major dense matrix of `f64`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

/// Below this fraction of nonzeros in the left operand, products switch to a
/// zero-skipping row kernel. Bag-of-words features sit far below it.
const SPARSE_LEFT_DENSITY: f64 = 0.25;

impl DenseMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn filled(rows: usize, cols: usize, value: f64) -> Self {
        Self {
            rows,
            cols,
            data: vec![value; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    /// Builds a matrix from row-major data, rejecting wrong lengths and
    /// non-finite entries.
    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return shape_err(format!(
                "data length {} does not match {}x{}",
                data.len(),
                rows,
                cols
            ));
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                row: pos / cols.max(1),
                col: pos % cols.max(1),
            });
        }
        Ok(Self { rows, cols, data })
    }

    /// Builds a matrix from a slice of equally long rows.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let n_rows = rows.len();
        let n_cols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(n_rows * n_cols);
        for (i, r) in rows.iter().enumerate() {
            let r = r.as_ref();
            if r.len() != n_cols {
                return shape_err(format!("row {i} has {} entries, expected {n_cols}", r.len()));
            }
            data.extend_from_slice(r);
        }
        Self::from_vec(n_rows, n_cols, data)
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    #[inline]
    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        let c = self.cols;
        &mut self.data[i * c..(i + 1) * c]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self.get(i, j)).collect()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn transpose(&self) -> DenseMatrix {
        let mut out = DenseMatrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out.data[j * self.rows + i] = self.data[i * self.cols + j];
            }
        }
        out
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> DenseMatrix {
        DenseMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn map_inplace(&mut self, f: impl Fn(f64) -> f64) {
        for v in &mut self.data {
            *v = f(*v);
        }
    }

    /// Elementwise product.
    pub fn hadamard(&self, other: &DenseMatrix) -> Result<DenseMatrix> {
        self.check_same_shape(other, "hadamard")?;
        Ok(DenseMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a * b)
                .collect(),
        })
    }

    pub fn scale(&mut self, s: f64) {
        for v in &mut self.data {
            *v *= s;
        }
    }

    pub fn scaled(&self, s: f64) -> DenseMatrix {
        self.map(|v| v * s)
    }

    /// `self += alpha * other`.
    pub fn axpy(&mut self, alpha: f64, other: &DenseMatrix) -> Result<()> {
        self.check_same_shape(other, "axpy")?;
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += alpha * b;
        }
        Ok(())
    }

    pub fn add_assign(&mut self, other: &DenseMatrix) -> Result<()> {
        self.check_same_shape(other, "add")?;
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += b;
        }
        Ok(())
    }

    pub fn sub(&self, other: &DenseMatrix) -> Result<DenseMatrix> {
        self.check_same_shape(other, "sub")?;
        Ok(DenseMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a - b)
                .collect(),
        })
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Largest absolute elementwise difference.
    pub fn max_abs_diff(&self, other: &DenseMatrix) -> Result<f64> {
        self.check_same_shape(other, "max_abs_diff")?;
        Ok(self
            .data
            .iter()
            .zip(&other.data)
            .fold(0.0, |m, (a, b)| m.max((a - b).abs())))
    }

    pub fn count_nonzero(&self) -> usize {
        self.data.iter().filter(|v| **v != 0.0).count()
    }

    /// Horizontal concatenation of blocks with equal row counts.
    pub fn hstack(blocks: &[&DenseMatrix]) -> Result<DenseMatrix> {
        let rows = blocks.first().map_or(0, |b| b.rows);
        if let Some(b) = blocks.iter().find(|b| b.rows != rows) {
            return shape_err(format!("hstack: block has {} rows, expected {rows}", b.rows));
        }
        let cols: usize = blocks.iter().map(|b| b.cols).sum();
        let mut out = DenseMatrix::zeros(rows, cols);
        for i in 0..rows {
            let mut offset = 0;
            let dst = out.row_mut(i);
            for b in blocks {
                dst[offset..offset + b.cols].copy_from_slice(b.row(i));
                offset += b.cols;
            }
        }
        Ok(out)
    }

    /// Vertical concatenation of blocks with equal column counts.
    pub fn vstack(blocks: &[&DenseMatrix]) -> Result<DenseMatrix> {
        let cols = blocks.first().map_or(0, |b| b.cols);
        if let Some(b) = blocks.iter().find(|b| b.cols != cols) {
            return shape_err(format!("vstack: block has {} cols, expected {cols}", b.cols));
        }
        let mut data = Vec::with_capacity(blocks.iter().map(|b| b.data.len()).sum());
        for b in blocks {
            data.extend_from_slice(&b.data);
        }
        let rows = blocks.iter().map(|b| b.rows).sum();
        Ok(DenseMatrix { rows, cols, data })
    }

    /// Columns `start..start + width`.
    pub fn column_block(&self, start: usize, width: usize) -> Result<DenseMatrix> {
        if start + width > self.cols {
            return shape_err(format!(
                "column block {start}..{} out of {} columns",
                start + width,
                self.cols
            ));
        }
        let mut out = DenseMatrix::zeros(self.rows, width);
        for i in 0..self.rows {
            out.row_mut(i)
                .copy_from_slice(&self.row(i)[start..start + width]);
        }
        Ok(out)
    }

    /// Rows `start..start + height`.
    pub fn row_block(&self, start: usize, height: usize) -> Result<DenseMatrix> {
        if start + height > self.rows {
            return shape_err(format!(
                "row block {start}..{} out of {} rows",
                start + height,
                self.rows
            ));
        }
        Ok(DenseMatrix {
            rows: height,
            cols: self.cols,
            data: self.data[start * self.cols..(start + height) * self.cols].to_vec(),
        })
    }

    /// Writes `block` into this matrix with its top-left corner at `(r0, c0)`.
    pub fn set_block(&mut self, r0: usize, c0: usize, block: &DenseMatrix) -> Result<()> {
        if r0 + block.rows > self.rows || c0 + block.cols > self.cols {
            return shape_err(format!(
                "block {}x{} at ({r0},{c0}) does not fit in {}x{}",
                block.rows, block.cols, self.rows, self.cols
            ));
        }
        for i in 0..block.rows {
            let c = self.cols;
            self.data[(r0 + i) * c + c0..(r0 + i) * c + c0 + block.cols]
                .copy_from_slice(block.row(i));
        }
        Ok(())
    }

    pub fn select_rows(&self, idx: &[usize]) -> DenseMatrix {
        let mut data = Vec::with_capacity(idx.len() * self.cols);
        for &i in idx {
            data.extend_from_slice(self.row(i));
        }
        DenseMatrix {
            rows: idx.len(),
            cols: self.cols,
            data,
        }
    }

    /// Scales each row to unit sum. Rows summing to zero are left untouched.
    pub fn row_normalize(&mut self) {
        for i in 0..self.rows {
            let row = self.row_mut(i);
            let s: f64 = row.iter().sum();
            if s != 0.0 {
                let inv = 1.0 / s;
                for v in row {
                    *v *= inv;
                }
            }
        }
    }

    fn check_same_shape(&self, other: &DenseMatrix, op: &str) -> Result<()> {
        if self.shape() != other.shape() {
            return shape_err(format!(
                "{op}: {}x{} vs {}x{}",
                self.rows, self.cols, other.rows, other.cols
            ));
        }
        Ok(())
    }
}

/// Borrowed row-major matrix, e.g. a contiguous block of rows.
#[derive(Debug, Clone, Copy)]
pub struct MatRef<'a> {
    pub rows: usize,
    pub cols: usize,
    pub data: &'a [f64],
}

impl MatRef<'_> {
    fn density(&self) -> f64 {
        if self.data.is_empty() {
            return 1.0;
        }
        self.data.iter().filter(|v| **v != 0.0).count() as f64 / self.data.len() as f64
    }

    #[inline]
    fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }
}

impl DenseMatrix {
    pub fn view(&self) -> MatRef<'_> {
        MatRef {
            rows: self.rows,
            cols: self.cols,
            data: &self.data,
        }
    }

    /// View of rows `start..start + height` without copying.
    pub fn rows_view(&self, start: usize, height: usize) -> MatRef<'_> {
        assert!(start + height <= self.rows, "row view out of range");
        MatRef {
            rows: height,
            cols: self.cols,
            data: &self.data[start * self.cols..(start + height) * self.cols],
        }
    }

    /// Mutable rows `start..start + height` as a flat row-major slice.
    pub fn rows_mut(&mut self, start: usize, height: usize) -> &mut [f64] {
        assert!(start + height <= self.rows, "row slice out of range");
        let c = self.cols;
        &mut self.data[start * c..(start + height) * c]
    }
}

/// `a * b`.
pub fn gemm(a: &DenseMatrix, b: &DenseMatrix) -> Result<DenseMatrix> {
    if a.cols != b.rows {
        return shape_err(format!(
            "gemm: {}x{} times {}x{}",
            a.rows, a.cols, b.rows, b.cols
        ));
    }
    let mut out = DenseMatrix::zeros(a.rows, b.cols);
    gemm_acc(a.view(), b.view(), &mut out.data);
    Ok(out)
}

/// `aᵀ * b`.
pub fn gemm_tn(a: &DenseMatrix, b: &DenseMatrix) -> Result<DenseMatrix> {
    if a.rows != b.rows {
        return shape_err(format!(
            "gemm_tn: ({}x{})ᵀ times {}x{}",
            a.rows, a.cols, b.rows, b.cols
        ));
    }
    let mut out = DenseMatrix::zeros(a.cols, b.cols);
    gemm_tn_acc(a.view(), b.view(), &mut out.data);
    Ok(out)
}

/// `a * bᵀ`.
pub fn gemm_nt(a: &DenseMatrix, b: &DenseMatrix) -> Result<DenseMatrix> {
    if a.cols != b.cols {
        return shape_err(format!(
            "gemm_nt: {}x{} times ({}x{})ᵀ",
            a.rows, a.cols, b.rows, b.cols
        ));
    }
    let mut out = DenseMatrix::zeros(a.rows, b.rows);
    gemm_nt_acc(a.view(), b.view(), &mut out.data);
    Ok(out)
}

/// `out += a * b`, with `out` row-major `a.rows × b.cols`.
///
/// Left operands with few nonzeros go through a zero-skipping row kernel;
/// either path has a fixed accumulation order.
pub fn gemm_acc(a: MatRef<'_>, b: MatRef<'_>, out: &mut [f64]) {
    assert_eq!(a.cols, b.rows, "gemm_acc inner dimension");
    assert_eq!(out.len(), a.rows * b.cols, "gemm_acc output size");
    if a.density() < SPARSE_LEFT_DENSITY {
        for i in 0..a.rows {
            let dst = &mut out[i * b.cols..(i + 1) * b.cols];
            for (k, &aik) in a.row(i).iter().enumerate() {
                if aik != 0.0 {
                    for (d, s) in dst.iter_mut().zip(b.row(k)) {
                        *d += aik * s;
                    }
                }
            }
        }
    } else {
        raw_gemm(
            a.rows, a.cols, b.cols, a.data, a.cols as isize, 1, b.data, b.cols as isize, 1, out,
        );
    }
}

/// `out += aᵀ * b`, with `out` row-major `a.cols × b.cols`.
pub fn gemm_tn_acc(a: MatRef<'_>, b: MatRef<'_>, out: &mut [f64]) {
    assert_eq!(a.rows, b.rows, "gemm_tn_acc inner dimension");
    assert_eq!(out.len(), a.cols * b.cols, "gemm_tn_acc output size");
    if a.density() < SPARSE_LEFT_DENSITY {
        for i in 0..a.rows {
            let src = b.row(i);
            for (k, &aik) in a.row(i).iter().enumerate() {
                if aik != 0.0 {
                    let dst = &mut out[k * b.cols..(k + 1) * b.cols];
                    for (d, s) in dst.iter_mut().zip(src) {
                        *d += aik * s;
                    }
                }
            }
        }
    } else {
        raw_gemm(
            a.cols, a.rows, b.cols, a.data, 1, a.cols as isize, b.data, b.cols as isize, 1, out,
        );
    }
}

/// `out += a * bᵀ`, with `out` row-major `a.rows × b.rows`.
pub fn gemm_nt_acc(a: MatRef<'_>, b: MatRef<'_>, out: &mut [f64]) {
    assert_eq!(a.cols, b.cols, "gemm_nt_acc inner dimension");
    assert_eq!(out.len(), a.rows * b.rows, "gemm_nt_acc output size");
    raw_gemm(
        a.rows, a.cols, b.rows, a.data, a.cols as isize, 1, b.data, 1, b.cols as isize, out,
    );
}

/// `c += a * b` through matrixmultiply, with explicit strides.
#[allow(clippy::too_many_arguments)]
fn raw_gemm(
    m: usize,
    k: usize,
    n: usize,
    a: &[f64],
    rsa: isize,
    csa: isize,
    b: &[f64],
    rsb: isize,
    csb: isize,
    c: &mut [f64],
) {
    if m == 0 || n == 0 || k == 0 {
        return;
    }
    // SAFETY: strides describe in-bounds layouts of `a` (m×k), `b` (k×n) and
    // `c` (m×n, row-major); callers assert the sizes.
    unsafe {
        matrixmultiply::dgemm(
            m,
            k,
            n,
            1.0,
            a.as_ptr(),
            rsa,
            csa,
            b.as_ptr(),
            rsb,
            csb,
            1.0,
            c.as_mut_ptr(),
            n as isize,
            1,
        );
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn naive(a: &DenseMatrix, b: &DenseMatrix) -> DenseMatrix {
        DenseMatrix::from_fn(a.rows(), b.cols(), |i, j| {
            (0..a.cols()).map(|k| a.get(i, k) * b.get(k, j)).sum()
        })
    }

    fn random(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> DenseMatrix {
        DenseMatrix::from_fn(rows, cols, |_, _| rng.random_range(-1.0..1.0))
    }

    #[test]
    fn identity_times_b_is_b() {
        let b = DenseMatrix::from_rows(&[[1.0, 2.0], [3.0, 4.0]]).unwrap();
        assert_eq!(gemm(&DenseMatrix::identity(2), &b).unwrap(), b);
    }

    #[test]
    fn row_times_column() {
        let a = DenseMatrix::from_rows(&[[1.0, 2.0]]).unwrap();
        let b = DenseMatrix::from_rows(&[[3.0], [4.0]]).unwrap();
        assert_eq!(gemm(&a, &b).unwrap().as_slice(), &[11.0]);
    }

    #[test]
    fn random_product_matches_triple_loop() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let a = random(5, 4, &mut rng);
        let b = random(4, 3, &mut rng);
        let got = gemm(&a, &b).unwrap();
        assert!(got.max_abs_diff(&naive(&a, &b)).unwrap() < 1e-12);
    }

    #[test]
    fn transposed_products_match_explicit_transpose() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let a = random(7, 5, &mut rng);
        let b = random(7, 3, &mut rng);
        let c = random(4, 5, &mut rng);
        let tn = gemm_tn(&a, &b).unwrap();
        assert!(tn.max_abs_diff(&naive(&a.transpose(), &b)).unwrap() < 1e-12);
        let nt = gemm_nt(&a, &c).unwrap();
        assert!(nt.max_abs_diff(&naive(&a, &c.transpose())).unwrap() < 1e-12);
    }

    #[test]
    fn sparse_left_operand_takes_skip_path_and_agrees() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let a = DenseMatrix::from_fn(20, 30, |_, _| {
            if rng.random_bool(0.05) {
                1.0
            } else {
                0.0
            }
        });
        let b = random(30, 6, &mut rng);
        let g = random(20, 6, &mut rng);
        assert!(gemm(&a, &b).unwrap().max_abs_diff(&naive(&a, &b)).unwrap() < 1e-12);
        let tn = gemm_tn(&a, &g).unwrap();
        assert!(tn.max_abs_diff(&naive(&a.transpose(), &g)).unwrap() < 1e-12);
    }

    #[test]
    fn shape_errors() {
        let a = DenseMatrix::zeros(2, 3);
        assert!(matches!(gemm(&a, &a), Err(Error::Shape(_))));
        assert!(matches!(gemm_tn(&a, &DenseMatrix::zeros(3, 1)), Err(Error::Shape(_))));
        assert!(DenseMatrix::from_vec(2, 2, vec![1.0; 3]).is_err());
    }

    #[test]
    fn rejects_non_finite_input() {
        let err = DenseMatrix::from_vec(1, 2, vec![1.0, f64::NAN]).unwrap_err();
        assert!(matches!(err, Error::NonFinite { row: 0, col: 1 }));
    }

    #[test]
    fn stacking_and_blocks_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let a = random(3, 2, &mut rng);
        let b = random(3, 4, &mut rng);
        let h = DenseMatrix::hstack(&[&a, &b]).unwrap();
        assert_eq!(h.column_block(0, 2).unwrap(), a);
        assert_eq!(h.column_block(2, 4).unwrap(), b);
        let v = DenseMatrix::vstack(&[&a, &a]).unwrap();
        assert_eq!(v.row_block(3, 3).unwrap(), a);
    }
}
