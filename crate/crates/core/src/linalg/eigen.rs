//! Symmetric eigensolvers: dense full decomposition and Lanczos with full
//! reorthogonalization for operators too large to densify.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{shape_err, Error, Result};
use crate::linalg::{DenseMatrix, SparseMatrix};

/// Largest dimension the dense path accepts.
pub const DENSE_EIGEN_LIMIT: usize = 5000;

const EIGEN_MAX_ITER: usize = 10_000;
const LANCZOS_START_SEED: u64 = 0x5eed_1a2c;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum SpectrumMethod {
    /// Every eigenvalue from a dense symmetric decomposition.
    DenseFull,
    /// `k` extremal Ritz values after `iters` Lanczos steps.
    Lanczos { k: usize, iters: usize },
}

/// Eigenvalues of a symmetric sparse matrix, sorted ascending.
pub fn spectrum(s: &SparseMatrix, method: SpectrumMethod) -> Result<Vec<f64>> {
    if !s.is_symmetric() {
        return shape_err("spectrum requires a symmetric matrix");
    }
    match method {
        SpectrumMethod::DenseFull => {
            if s.rows() > DENSE_EIGEN_LIMIT {
                return Err(Error::TooLarge {
                    n: s.rows(),
                    limit: DENSE_EIGEN_LIMIT,
                });
            }
            symmetric_eigenvalues(&s.to_dense())
        }
        SpectrumMethod::Lanczos { k, iters } => {
            let n = s.rows();
            let start = random_unit_vector(n, LANCZOS_START_SEED);
            let tri = lanczos(s, &start, iters.min(n))?;
            let (mut ritz, _) = tri.eigen()?;
            if tri.broke_down && ritz.len() < k.min(n) {
                return Err(Error::Numerical(format!(
                    "Lanczos broke down after {} steps, fewer than the {k} requested Ritz values",
                    ritz.len()
                )));
            }
            if k < ritz.len() {
                let low = k / 2;
                let high = k - low;
                let mut picked = ritz[..low].to_vec();
                picked.extend_from_slice(&ritz[ritz.len() - high..]);
                ritz = picked;
            }
            Ok(ritz)
        }
    }
}

/// All eigenvalues of a dense symmetric matrix, ascending.
pub fn symmetric_eigenvalues(m: &DenseMatrix) -> Result<Vec<f64>> {
    check_square(m)?;
    if m.rows() == 0 {
        return Ok(Vec::new());
    }
    let a = DMatrix::from_row_slice(m.rows(), m.cols(), m.as_slice());
    let mut vals: Vec<f64> = a.symmetric_eigenvalues().iter().copied().collect();
    if vals.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numerical("symmetric eigensolver produced non-finite values".into()));
    }
    vals.sort_by(f64::total_cmp);
    Ok(vals)
}

/// Eigenvalues (ascending) and matching orthonormal eigenvectors as columns.
pub fn symmetric_eigen(m: &DenseMatrix) -> Result<(Vec<f64>, DenseMatrix)> {
    check_square(m)?;
    let n = m.rows();
    let a = DMatrix::from_row_slice(n, n, m.as_slice());
    let eig = nalgebra::SymmetricEigen::try_new(a, f64::EPSILON, EIGEN_MAX_ITER)
        .ok_or_else(|| Error::Numerical("symmetric eigensolver did not converge".into()))?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = DenseMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
    Ok((values, vectors))
}

fn check_square(m: &DenseMatrix) -> Result<()> {
    if m.rows() != m.cols() {
        return shape_err(format!("expected square matrix, got {}x{}", m.rows(), m.cols()));
    }
    Ok(())
}

pub(crate) fn random_unit_vector(n: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut v: Vec<f64> = (0..n).map(|_| rng.random::<f64>() - 0.5).collect();
    let norm = dot(&v, &v).sqrt();
    for x in &mut v {
        *x /= norm;
    }
    v
}

/// Symmetric tridiagonal matrix produced by Lanczos.
#[derive(Debug, Clone)]
pub struct Tridiagonal {
    pub alpha: Vec<f64>,
    /// Off-diagonal, `alpha.len() - 1` entries.
    pub beta: Vec<f64>,
    /// True when an invariant subspace was hit before the requested step count.
    pub broke_down: bool,
}

impl Tridiagonal {
    /// Eigenvalues (ascending) and the first component of each normalized
    /// eigenvector, which serve as Gauss quadrature weights.
    pub fn eigen(&self) -> Result<(Vec<f64>, Vec<f64>)> {
        tridiagonal_eigen(&self.alpha, &self.beta)
    }
}

/// Lanczos tridiagonalization with full (twice-iterated Gram-Schmidt)
/// reorthogonalization against every previous basis vector.
pub fn lanczos(s: &SparseMatrix, start: &[f64], steps: usize) -> Result<Tridiagonal> {
    let n = s.rows();
    if start.len() != n {
        return shape_err(format!("start vector has {} entries, need {n}", start.len()));
    }
    let norm = dot(start, start).sqrt();
    if norm == 0.0 || !norm.is_finite() {
        return Err(Error::Numerical("Lanczos start vector must be nonzero".into()));
    }
    let steps = steps.min(n);
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(steps);
    basis.push(start.iter().map(|v| v / norm).collect());
    let mut alpha = Vec::with_capacity(steps);
    let mut beta = Vec::with_capacity(steps.saturating_sub(1));
    let mut w = vec![0.0; n];
    let mut scale = 0.0f64;
    let mut broke_down = false;

    for j in 0..steps {
        s.spmv(&basis[j], &mut w);
        if j > 0 {
            let b = beta[j - 1];
            for (wi, qi) in w.iter_mut().zip(&basis[j - 1]) {
                *wi -= b * qi;
            }
        }
        let a = dot(&w, &basis[j]);
        alpha.push(a);
        for (wi, qi) in w.iter_mut().zip(&basis[j]) {
            *wi -= a * qi;
        }
        for _ in 0..2 {
            for q in &basis {
                let proj = dot(&w, q);
                for (wi, qi) in w.iter_mut().zip(q) {
                    *wi -= proj * qi;
                }
            }
        }
        if j + 1 == steps {
            break;
        }
        let b = dot(&w, &w).sqrt();
        scale = scale.max(a.abs()).max(b);
        if b <= 1e-12 * scale.max(f64::MIN_POSITIVE) {
            broke_down = true;
            break;
        }
        beta.push(b);
        basis.push(w.iter().map(|v| v / b).collect());
    }
    Ok(Tridiagonal {
        alpha,
        beta,
        broke_down,
    })
}

/// Implicit QL on a symmetric tridiagonal matrix, tracking only the first
/// row of the eigenvector matrix.
pub fn tridiagonal_eigen(diag: &[f64], off: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
    let n = diag.len();
    if n == 0 {
        return Ok((Vec::new(), Vec::new()));
    }
    if off.len() + 1 != n {
        return shape_err(format!("tridiagonal: {} diagonal vs {} off-diagonal", n, off.len()));
    }
    let mut d = diag.to_vec();
    let mut e = off.to_vec();
    e.push(0.0);
    let mut z = vec![0.0; n];
    z[0] = 1.0;

    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            if iter > 60 {
                return Err(Error::Numerical("tridiagonal QL did not converge".into()));
            }
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let (mut s, mut c, mut p) = (1.0, 1.0, 0.0);
            let mut deflated = false;
            let mut i = m;
            while i > l {
                i -= 1;
                let f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    deflated = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
                let zf = z[i + 1];
                z[i + 1] = s * z[i] + c * zf;
                z[i] = c * z[i] - s * zf;
            }
            if deflated {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| d[a].total_cmp(&d[b]));
    Ok((
        order.iter().map(|&i| d[i]).collect(),
        order.iter().map(|&i| z[i]).collect(),
    ))
}

/// Stochastic Lanczos quadrature estimate of the eigenvalue density.
///
/// Returns `(nodes, weights)` with weights summing to the matrix dimension.
pub fn spectral_density(
    s: &SparseMatrix,
    steps: usize,
    probes: usize,
    seed: u64,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let n = s.rows();
    let mut nodes = Vec::new();
    let mut weights = Vec::new();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..probes.max(1) {
        let v: Vec<f64> = (0..n)
            .map(|_| if rng.random_bool(0.5) { 1.0 } else { -1.0 })
            .collect();
        let tri = lanczos(s, &v, steps)?;
        let (theta, first) = tri.eigen()?;
        for (t, f) in theta.into_iter().zip(first) {
            nodes.push(t);
            weights.push(f * f * n as f64 / probes.max(1) as f64);
        }
    }
    Ok((nodes, weights))
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::gemm;

    fn path_laplacian(n: usize) -> SparseMatrix {
        let mut t = Vec::new();
        for i in 0..n {
            let deg = if i == 0 || i + 1 == n { 1.0 } else { 2.0 };
            t.push((i, i, deg));
            if i + 1 < n {
                t.push((i, i + 1, -1.0));
                t.push((i + 1, i, -1.0));
            }
        }
        SparseMatrix::from_triplets(n, n, t).unwrap()
    }

    #[test]
    fn two_by_two_laplacian() {
        let l = SparseMatrix::from_triplets(
            2,
            2,
            [(0, 0, 1.0), (0, 1, -1.0), (1, 0, -1.0), (1, 1, 1.0)],
        )
        .unwrap();
        let ev = spectrum(&l, SpectrumMethod::DenseFull).unwrap();
        assert!(ev[0].abs() < 1e-14 && (ev[1] - 2.0).abs() < 1e-14);
    }

    #[test]
    fn path_laplacian_closed_form() {
        // eigenvalues of the path Laplacian are 2 - 2cos(πk/n)
        let n = 40;
        let ev = spectrum(&path_laplacian(n), SpectrumMethod::DenseFull).unwrap();
        for (k, v) in ev.iter().enumerate() {
            let exact = 2.0 - 2.0 * (std::f64::consts::PI * k as f64 / n as f64).cos();
            assert!((v - exact).abs() < 1e-12, "k={k}: {v} vs {exact}");
        }
    }

    #[test]
    fn full_lanczos_matches_dense() {
        let l = path_laplacian(30);
        let dense = spectrum(&l, SpectrumMethod::DenseFull).unwrap();
        let lz = spectrum(&l, SpectrumMethod::Lanczos { k: 30, iters: 30 }).unwrap();
        for (a, b) in dense.iter().zip(&lz) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn lanczos_extremal_values_converge_first() {
        // Interior eigenvalues 0..198 with isolated outliers at both ends.
        let diag = (0..200).map(|i| match i {
            0 => (i, i, -300.0),
            199 => (i, i, 500.0),
            _ => (i, i, i as f64),
        });
        let l = SparseMatrix::from_triplets(200, 200, diag).unwrap();
        let dense = spectrum(&l, SpectrumMethod::DenseFull).unwrap();
        let lz = spectrum(&l, SpectrumMethod::Lanczos { k: 2, iters: 60 }).unwrap();
        assert_eq!(lz.len(), 2);
        assert!((lz[0] - dense[0]).abs() < 1e-8);
        assert!((lz[1] - dense[199]).abs() < 1e-8);
    }

    #[test]
    fn lanczos_breakdown_with_too_few_values_is_an_error() {
        // identity: Krylov space of any start vector is one-dimensional
        let err = spectrum(
            &SparseMatrix::identity(10),
            SpectrumMethod::Lanczos { k: 4, iters: 10 },
        )
        .unwrap_err();
        assert!(matches!(err, Error::Numerical(_)));
    }

    #[test]
    fn tridiagonal_ql_matches_dense_solver() {
        let diag = [2.0, -1.0, 0.5, 3.0, 1.0];
        let off = [1.0, 0.3, -0.7, 0.2];
        let (vals, first) = tridiagonal_eigen(&diag, &off).unwrap();
        let dense = DenseMatrix::from_fn(5, 5, |i, j| {
            if i == j {
                diag[i]
            } else if i + 1 == j {
                off[i]
            } else if j + 1 == i {
                off[j]
            } else {
                0.0
            }
        });
        let (ref_vals, ref_vecs) = symmetric_eigen(&dense).unwrap();
        for k in 0..5 {
            assert!((vals[k] - ref_vals[k]).abs() < 1e-12);
            assert!((first[k].abs() - ref_vecs.get(0, k).abs()).abs() < 1e-10);
        }
    }

    #[test]
    fn eigen_reconstruction() {
        let l = path_laplacian(25).to_dense();
        let (vals, v) = symmetric_eigen(&l).unwrap();
        let lambda = DenseMatrix::from_fn(25, 25, |i, j| if i == j { vals[i] } else { 0.0 });
        let rec = gemm(&gemm(&v, &lambda).unwrap(), &v.transpose()).unwrap();
        let rel = rec.sub(&l).unwrap().frobenius_norm() / l.frobenius_norm();
        assert!(rel < 1e-10);
    }

    #[test]
    fn density_weights_sum_to_dimension() {
        let l = path_laplacian(60);
        let (_, w) = spectral_density(&l, 20, 3, 1).unwrap();
        let total: f64 = w.iter().sum();
        assert!((total - 60.0).abs() < 1e-8);
    }

    #[test]
    fn rejects_nonsymmetric_and_too_large() {
        let s = SparseMatrix::from_triplets(2, 2, [(0, 1, 1.0)]).unwrap();
        assert!(spectrum(&s, SpectrumMethod::DenseFull).is_err());
        let big = SparseMatrix::identity(DENSE_EIGEN_LIMIT + 1);
        assert!(matches!(
            spectrum(&big, SpectrumMethod::DenseFull),
            Err(Error::TooLarge { .. })
        ));
    }
}
