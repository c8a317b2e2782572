use crate::error::{shape_err, Error, Result};
use crate::linalg::DenseMatrix;

/// Mean softmax cross-entropy over the rows in `mask`, and its gradient
/// with respect to the logits (zero outside `mask`).
pub fn masked_cross_entropy(
    logits: &DenseMatrix,
    labels: &[usize],
    mask: &[usize],
) -> Result<(f64, DenseMatrix)> {
    if mask.is_empty() {
        return Err(Error::EmptyMask);
    }
    if labels.len() != logits.rows() {
        return shape_err(format!("{} labels for {} logit rows", labels.len(), logits.rows()));
    }
    let c = logits.cols();
    let scale = 1.0 / mask.len() as f64;
    let mut grad = DenseMatrix::zeros(logits.rows(), c);
    let mut loss = 0.0;
    for &i in mask {
        let y = labels[i];
        if y >= c {
            return shape_err(format!("label {y} at node {i} with {c} classes"));
        }
        let row = logits.row(i);
        let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let sum: f64 = row.iter().map(|z| (z - max).exp()).sum();
        let log_z = max + sum.ln();
        loss += log_z - row[y];
        let g = grad.row_mut(i);
        for (k, gk) in g.iter_mut().enumerate() {
            *gk = (row[k] - log_z).exp() * scale;
        }
        g[y] -= scale;
    }
    Ok((loss * scale, grad))
}

/// Row argmax, ties going to the lowest class index.
pub fn predictions(logits: &DenseMatrix) -> Vec<usize> {
    (0..logits.rows())
        .map(|i| {
            let row = logits.row(i);
            let mut best = 0;
            for (k, &v) in row.iter().enumerate() {
                if v > row[best] {
                    best = k;
                }
            }
            best
        })
        .collect()
}

/// Fraction of `idx` whose argmax prediction matches the label.
pub fn accuracy(logits: &DenseMatrix, labels: &[usize], idx: &[usize]) -> Result<f64> {
    if idx.is_empty() {
        return Err(Error::EmptyMask);
    }
    let pred = predictions(logits);
    let hits = idx.iter().filter(|&&i| pred[i] == labels[i]).count();
    Ok(hits as f64 / idx.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_logits_give_log_c() {
        let logits = DenseMatrix::zeros(4, 5);
        let (loss, _) = masked_cross_entropy(&logits, &[0, 1, 2, 3], &[0, 2, 3]).unwrap();
        assert!((loss - 5f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn confident_correct_logits_go_to_zero() {
        let mut prev = f64::INFINITY;
        for scale in [1.0, 10.0, 100.0] {
            let logits = DenseMatrix::from_rows(&[[scale, 0.0], [0.0, scale]]).unwrap();
            let (loss, _) = masked_cross_entropy(&logits, &[0, 1], &[0, 1]).unwrap();
            assert!(loss < prev);
            prev = loss;
        }
        assert!(prev < 1e-40);
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let logits = DenseMatrix::from_fn(5, 3, |i, j| ((i * 7 + j * 3) % 5) as f64 * 0.4 - 0.9);
        let labels = [2, 0, 1, 1, 0];
        let mask = [0, 1, 3];
        let (_, grad) = masked_cross_entropy(&logits, &labels, &mask).unwrap();
        let h = 1e-6;
        for i in 0..5 {
            for j in 0..3 {
                let mut up = logits.clone();
                up.set(i, j, logits.get(i, j) + h);
                let mut dn = logits.clone();
                dn.set(i, j, logits.get(i, j) - h);
                let fd = (masked_cross_entropy(&up, &labels, &mask).unwrap().0
                    - masked_cross_entropy(&dn, &labels, &mask).unwrap().0)
                    / (2.0 * h);
                assert!((fd - grad.get(i, j)).abs() < 1e-7, "({i},{j}) {fd} vs {}", grad.get(i, j));
            }
        }
        assert!(grad.row(2).iter().all(|&g| g == 0.0));
    }

    #[test]
    fn empty_mask_rejected() {
        let logits = DenseMatrix::zeros(2, 2);
        assert!(matches!(masked_cross_entropy(&logits, &[0, 1], &[]), Err(Error::EmptyMask)));
        assert!(matches!(accuracy(&logits, &[0, 1], &[]), Err(Error::EmptyMask)));
    }

    #[test]
    fn ties_go_to_lowest_class() {
        let logits = DenseMatrix::from_rows(&[[1.0, 1.0, 0.0], [0.0, 2.0, 2.0]]).unwrap();
        assert_eq!(predictions(&logits), vec![0, 1]);
        assert_eq!(accuracy(&logits, &[0, 2], &[0, 1]).unwrap(), 0.5);
    }
}
