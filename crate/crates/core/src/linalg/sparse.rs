use crate::error::{shape_err, Error, Result};
use crate::linalg::DenseMatrix;

/// Compressed sparse row matrix.
///
/// Canonical form: column indices strictly increasing within each row and no
/// stored zeros, so two equal matrices have identical arrays.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix {
    rows: usize,
    cols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl SparseMatrix {
    /// Validates raw CSR arrays.
    pub fn from_csr(
        rows: usize,
        cols: usize,
        row_ptr: Vec<usize>,
        col_idx: Vec<usize>,
        values: Vec<f64>,
    ) -> Result<Self> {
        if row_ptr.len() != rows + 1 || row_ptr[0] != 0 {
            return shape_err(format!("row_ptr must have {} entries starting at 0", rows + 1));
        }
        if col_idx.len() != values.len() || *row_ptr.last().unwrap() != values.len() {
            return shape_err("col_idx/values length disagrees with row_ptr");
        }
        for i in 0..rows {
            if row_ptr[i] > row_ptr[i + 1] {
                return shape_err(format!("row_ptr not monotone at row {i}"));
            }
            let cols_i = &col_idx[row_ptr[i]..row_ptr[i + 1]];
            if cols_i.windows(2).any(|w| w[0] >= w[1]) {
                return shape_err(format!("column indices of row {i} not strictly increasing"));
            }
            if cols_i.iter().any(|&c| c >= cols) {
                return shape_err(format!("column index out of range in row {i}"));
            }
        }
        if let Some(p) = values.iter().position(|v| *v == 0.0 || !v.is_finite()) {
            let row = row_ptr.partition_point(|&s| s <= p) - 1;
            if values[p] == 0.0 {
                return shape_err(format!("explicit zero stored in row {row}"));
            }
            return Err(Error::NonFinite {
                row,
                col: col_idx[p],
            });
        }
        Ok(Self {
            rows,
            cols,
            row_ptr,
            col_idx,
            values,
        })
    }

    /// Builds a canonical CSR matrix from triplets. Duplicates are summed and
    /// resulting zeros dropped.
    pub fn from_triplets(
        rows: usize,
        cols: usize,
        triplets: impl IntoIterator<Item = (usize, usize, f64)>,
    ) -> Result<Self> {
        let mut t: Vec<(usize, usize, f64)> = triplets.into_iter().collect();
        if let Some(&(r, c, _)) = t.iter().find(|(r, c, _)| *r >= rows || *c >= cols) {
            return shape_err(format!("triplet ({r},{c}) outside {rows}x{cols}"));
        }
        t.sort_by_key(|a| (a.0, a.1));
        let mut row_ptr = vec![0usize; rows + 1];
        let mut col_idx = Vec::with_capacity(t.len());
        let mut values: Vec<f64> = Vec::with_capacity(t.len());
        let mut last: Option<(usize, usize)> = None;
        let mut row_of = Vec::with_capacity(t.len());
        for (r, c, v) in t {
            if last == Some((r, c)) {
                *values.last_mut().unwrap() += v;
            } else {
                col_idx.push(c);
                values.push(v);
                row_of.push(r);
                last = Some((r, c));
            }
        }
        let mut keep_cols = Vec::with_capacity(col_idx.len());
        let mut keep_vals = Vec::with_capacity(values.len());
        for ((c, v), r) in col_idx.into_iter().zip(values).zip(row_of) {
            if v != 0.0 {
                keep_cols.push(c);
                keep_vals.push(v);
                row_ptr[r + 1] += 1;
            }
        }
        for i in 0..rows {
            row_ptr[i + 1] += row_ptr[i];
        }
        Self::from_csr(rows, cols, row_ptr, keep_cols, keep_vals)
    }

    pub fn identity(n: usize) -> Self {
        Self {
            rows: n,
            cols: n,
            row_ptr: (0..=n).collect(),
            col_idx: (0..n).collect(),
            values: vec![1.0; n],
        }
    }

    pub fn from_dense(m: &DenseMatrix) -> Result<Self> {
        let mut trip = Vec::new();
        for i in 0..m.rows() {
            for (j, &v) in m.row(i).iter().enumerate() {
                if v != 0.0 {
                    trip.push((i, j, v));
                }
            }
        }
        Self::from_triplets(m.rows(), m.cols(), trip)
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row_ptr(&self) -> &[usize] {
        &self.row_ptr
    }

    pub fn col_idx(&self) -> &[usize] {
        &self.col_idx
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Iterates `(column, value)` pairs of row `i` in ascending column order.
    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        self.col_idx[r.clone()]
            .iter()
            .copied()
            .zip(self.values[r].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        match self.col_idx[r.clone()].binary_search(&j) {
            Ok(p) => self.values[r.start + p],
            Err(_) => 0.0,
        }
    }

    pub fn to_dense(&self) -> DenseMatrix {
        let mut out = DenseMatrix::zeros(self.rows, self.cols);
        for i in 0..self.rows {
            for (j, v) in self.row(i) {
                out.set(i, j, v);
            }
        }
        out
    }

    pub fn transpose(&self) -> SparseMatrix {
        let mut counts = vec![0usize; self.cols + 1];
        for &c in &self.col_idx {
            counts[c + 1] += 1;
        }
        for j in 0..self.cols {
            counts[j + 1] += counts[j];
        }
        let row_ptr = counts.clone();
        let mut next = counts;
        let mut col_idx = vec![0usize; self.nnz()];
        let mut values = vec![0.0; self.nnz()];
        // rows visited in ascending order keep the transposed columns sorted
        for i in 0..self.rows {
            for (j, v) in self.row(i) {
                let p = next[j];
                col_idx[p] = i;
                values[p] = v;
                next[j] += 1;
            }
        }
        SparseMatrix {
            rows: self.cols,
            cols: self.rows,
            row_ptr,
            col_idx,
            values,
        }
    }

    /// Exact symmetry: the CSR arrays equal those of the transpose.
    pub fn is_symmetric(&self) -> bool {
        self.rows == self.cols && *self == self.transpose()
    }

    pub fn row_sums(&self) -> Vec<f64> {
        (0..self.rows).map(|i| self.row(i).map(|(_, v)| v).sum()).collect()
    }

    pub fn spmv(&self, x: &[f64], y: &mut [f64]) {
        debug_assert_eq!(x.len(), self.cols);
        debug_assert_eq!(y.len(), self.rows);
        for (i, yi) in y.iter_mut().enumerate() {
            *yi = self.row(i).map(|(j, v)| v * x[j]).sum();
        }
    }

    /// Sparse-dense product `self * x`.
    ///
    /// Each output row accumulates contributions in ascending column order,
    /// so results are bitwise reproducible.
    pub fn spmm(&self, x: &DenseMatrix) -> Result<DenseMatrix> {
        if self.cols != x.rows() {
            return shape_err(format!(
                "spmm: {}x{} times {}x{}",
                self.rows,
                self.cols,
                x.rows(),
                x.cols()
            ));
        }
        let f = x.cols();
        let mut out = DenseMatrix::zeros(self.rows, f);
        for i in 0..self.rows {
            let dst = out.row_mut(i);
            for (j, v) in self.row(i) {
                for (d, s) in dst.iter_mut().zip(x.row(j)) {
                    *d += v * s;
                }
            }
        }
        Ok(out)
    }

    /// Returns `scale * self + shift * I` for square matrices.
    pub fn scale_shift(&self, scale: f64, shift: f64) -> Result<SparseMatrix> {
        if self.rows != self.cols {
            return shape_err("scale_shift requires a square matrix");
        }
        let mut trip: Vec<(usize, usize, f64)> = Vec::with_capacity(self.nnz() + self.rows);
        for i in 0..self.rows {
            for (j, v) in self.row(i) {
                trip.push((i, j, scale * v));
            }
            if shift != 0.0 {
                trip.push((i, i, shift));
            }
        }
        SparseMatrix::from_triplets(self.rows, self.cols, trip)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn permutation_spmm_swaps_rows() {
        let s = SparseMatrix::from_triplets(2, 2, [(0, 1, 1.0), (1, 0, 1.0)]).unwrap();
        let x = DenseMatrix::from_rows(&[[1.0, 2.0], [3.0, 4.0]]).unwrap();
        let y = s.spmm(&x).unwrap();
        assert_eq!(y.as_slice(), &[3.0, 4.0, 1.0, 2.0]);
    }

    #[test]
    fn identity_spmm_is_noop() {
        let x = DenseMatrix::from_rows(&[[1.5, -2.0], [0.0, 4.0], [7.0, 8.0]]).unwrap();
        assert_eq!(SparseMatrix::identity(3).spmm(&x).unwrap(), x);
    }

    #[test]
    fn triplets_merge_duplicates_and_drop_zeros() {
        let s = SparseMatrix::from_triplets(
            2,
            3,
            [(1, 2, 1.0), (0, 1, 2.0), (1, 2, 3.0), (0, 0, 1.0), (0, 0, -1.0)],
        )
        .unwrap();
        assert_eq!(s.row_ptr(), &[0, 1, 2]);
        assert_eq!(s.col_idx(), &[1, 2]);
        assert_eq!(s.values(), &[2.0, 4.0]);
    }

    #[test]
    fn from_csr_rejects_unsorted_columns_and_zeros() {
        assert!(SparseMatrix::from_csr(1, 3, vec![0, 2], vec![2, 1], vec![1.0, 1.0]).is_err());
        assert!(SparseMatrix::from_csr(1, 3, vec![0, 1], vec![1], vec![0.0]).is_err());
        assert!(SparseMatrix::from_csr(2, 3, vec![0, 2, 1], vec![0, 1], vec![1.0, 1.0]).is_err());
    }

    #[test]
    fn transpose_of_transpose_is_identity_op() {
        let s = SparseMatrix::from_triplets(3, 4, [(0, 3, 1.0), (2, 0, -2.0), (1, 1, 5.0)])
            .unwrap();
        assert_eq!(s.transpose().transpose(), s);
        assert_eq!(s.transpose().get(3, 0), 1.0);
        assert!(!s.is_symmetric());
    }

    #[test]
    fn spmm_shape_mismatch() {
        let s = SparseMatrix::identity(3);
        assert!(matches!(
            s.spmm(&DenseMatrix::zeros(2, 2)),
            Err(Error::Shape(_))
        ));
    }
}
