use crate::error::{shape_err, Error, Result};
use crate::krylov::block_krylov_matrix;
use crate::linalg::{gemm, Activation, DenseMatrix, SparseMatrix};
use crate::nn::forward::blocks_times;
use crate::nn::{Architecture, ModelParams, ModelSpec};

/// Rewrites a linear snowball network in block Krylov form.
///
/// Each hidden block is `H_i = K · M_i`, where `K = [X, LX, …, L^n X]` and
/// `M_i` holds one `F × F_i` coefficient per power of `L`. The recursion is
/// `M_{l+1} = S (Σ_{i≤l} M_i W_l^i)`, with `S` shifting coefficient blocks
/// one power up, which is the product of block-diagonal factors written
/// out. The returned `W_eq` satisfies `C = K · W_eq`, so the logits equal
/// `L^p · K · W_eq · W_C`.
pub fn collapse_linear_snowball(
    params: &ModelParams,
    spec: &ModelSpec,
    l: &SparseMatrix,
    x: &DenseMatrix,
) -> Result<(DenseMatrix, DenseMatrix)> {
    if spec.arch != Architecture::Snowball {
        return Err(Error::NotLinear(format!("{} is not a snowball network", spec.arch)));
    }
    if spec.f_act != Activation::Identity || spec.g_act != Activation::Identity {
        return Err(Error::NotLinear(format!(
            "activations f={}, g={} are not both identity",
            spec.f_act, spec.g_act
        )));
    }
    params.check(spec)?;
    if x.cols() != spec.input_dim {
        return shape_err(format!("features have {} columns, model expects {}", x.cols(), spec.input_dim));
    }
    let n = spec.depth();
    let f = spec.input_dim;
    let k = block_krylov_matrix(l, x, n + 1)?;

    let mut coeffs: Vec<DenseMatrix> = Vec::with_capacity(n + 1);
    let mut m0 = DenseMatrix::zeros((n + 1) * f, f);
    m0.set_block(0, 0, &DenseMatrix::identity(f))?;
    coeffs.push(m0);
    for w in &params.layers {
        let refs: Vec<&DenseMatrix> = coeffs.iter().collect();
        let combined = blocks_times(&refs, w);
        coeffs.push(shift_down(&combined, f));
    }
    let refs: Vec<&DenseMatrix> = coeffs.iter().collect();
    let m = DenseMatrix::hstack(&refs)?;
    let w_eq = match &params.classifier {
        None => m,
        Some(wn) => gemm(&m, wn)?,
    };
    Ok((k, w_eq))
}

/// Moves row block `j` (height `f`) to row block `j + 1`; the last block
/// must be zero.
fn shift_down(m: &DenseMatrix, f: usize) -> DenseMatrix {
    let mut out = DenseMatrix::zeros(m.rows(), m.cols());
    let keep = m.rows() - f;
    out.rows_mut(f, keep).copy_from_slice(m.rows_view(0, keep).data);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{build_graph, diffusion, DiffusionKind};
    use crate::nn::{forward_snowball, init_params, InitScheme};

    #[test]
    fn depth_zero_is_identity() {
        let g = build_graph(&[(0, 1), (1, 2)], 3).unwrap();
        let l = diffusion(&g, DiffusionKind::RenormalizedAdjacency).matrix;
        let x = DenseMatrix::from_rows(&[[1.0, 0.0], [0.0, 1.0], [1.0, 1.0]]).unwrap();
        let spec = ModelSpec::linear_snowball(2, 3, 0, 2);
        let p = init_params(&spec, InitScheme::GlorotUniform, 1);
        let (k, w) = collapse_linear_snowball(&p, &spec, &l, &x).unwrap();
        assert_eq!(k, x);
        assert_eq!(w, DenseMatrix::identity(2));
    }

    #[test]
    fn depth_one_matches_hand_expansion() {
        // H_1 = L X W_0, so [H_0, H_1] = [X, LX] · [[I, 0], [0, W_0]].
        let g = build_graph(&[(0, 1), (1, 2), (2, 3)], 4).unwrap();
        let l = diffusion(&g, DiffusionKind::RenormalizedAdjacency).matrix;
        let x = DenseMatrix::from_fn(4, 2, |i, j| (i * 2 + j) as f64 * 0.3 - 0.5);
        let spec = ModelSpec::linear_snowball(2, 3, 1, 2);
        let p = init_params(&spec, InitScheme::Normal { sigma: 1.0 }, 5);
        let (_, w) = collapse_linear_snowball(&p, &spec, &l, &x).unwrap();
        let mut expect = DenseMatrix::zeros(4, 5);
        expect.set_block(0, 0, &DenseMatrix::identity(2)).unwrap();
        expect.set_block(2, 2, &p.layers[0]).unwrap();
        assert_eq!(w, expect);
    }

    #[test]
    fn rejects_nonlinear() {
        let g = build_graph(&[(0, 1)], 2).unwrap();
        let l = diffusion(&g, DiffusionKind::RenormalizedAdjacency).matrix;
        let x = DenseMatrix::identity(2);
        let spec = ModelSpec::snowball(2, 2, 1, 2);
        let p = init_params(&spec, InitScheme::GlorotUniform, 1);
        assert!(matches!(
            collapse_linear_snowball(&p, &spec, &l, &x),
            Err(Error::NotLinear(_))
        ));
        let (_, _) = forward_snowball(&l, &x, &p, &spec).unwrap();
    }
}
