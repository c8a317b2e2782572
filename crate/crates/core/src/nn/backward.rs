use std::borrow::Cow;

use crate::error::{shape_err, Result};
use crate::linalg::{gemm_nt_acc, gemm_tn_acc, Activation, DenseMatrix, SparseMatrix};
use crate::nn::forward::{c_blocks, classifier_block_ids};
use crate::nn::{Architecture, Classifier, ForwardTape, ModelParams, ModelSpec};

/// Reverse pass. Returns `∂loss/∂W` for every weight, given
/// `∂loss/∂logits`.
pub fn backward(
    tape: &ForwardTape<'_>,
    params: &ModelParams,
    spec: &ModelSpec,
    grad_logits: &DenseMatrix,
) -> Result<ModelParams> {
    params.check(spec)?;
    let n = tape.input.rows();
    if grad_logits.shape() != (n, spec.n_classes) {
        return shape_err(format!(
            "grad_logits is {:?}, expected {:?}",
            grad_logits.shape(),
            (n, spec.n_classes)
        ));
    }
    let l = tape.operator;
    let lt: Cow<'_, SparseMatrix> = if l.is_symmetric() {
        Cow::Borrowed(l)
    } else {
        Cow::Owned(l.transpose())
    };
    let depth = spec.depth();
    let mut grads = params.zeros_like();
    // Gradients with respect to H_1 … H_n as consumed downstream.
    let mut dh: Vec<Option<DenseMatrix>> = vec![None; depth + 1];
    let widths = spec.widths();

    if spec.arch == Architecture::VanillaGcn {
        let dp = lt.spmm(grad_logits)?;
        let h = tape.block(depth);
        gemm_tn_acc(h.view(), dp.view(), grads.output.as_mut_slice());
        if depth > 0 {
            accumulate_nt(&mut dh[depth], &dp, params.output.rows_view(0, widths[depth]));
        }
    } else {
        let dcw = if spec.p == 1 {
            lt.spmm(grad_logits)?
        } else {
            grad_logits.clone()
        };
        let c = c_blocks(tape, spec);
        let mut dc: Vec<DenseMatrix> = Vec::with_capacity(c.len());
        let mut offset = 0;
        for block in &c {
            let w = block.cols();
            gemm_tn_acc(block.view(), dcw.view(), grads.output.rows_mut(offset, w));
            let mut g = DenseMatrix::zeros(n, w);
            gemm_nt_acc(dcw.view(), params.output.rows_view(offset, w), g.as_mut_slice());
            dc.push(g);
            offset += w;
        }

        let ids = classifier_block_ids(spec);
        match spec.classifier {
            Classifier::Identity => {
                for (&i, mut g) in ids.iter().zip(dc) {
                    if i == 0 {
                        continue;
                    }
                    if spec.g_act != Activation::Identity {
                        g = g.hadamard(&spec.g_act.grad(tape.block(i)))?;
                    }
                    add_into(&mut dh[i], g)?;
                }
            }
            Classifier::Dense { .. } => {
                let mut g = dc.pop().expect("one dense classifier block");
                if let Some(mask) = &tape.classifier_mask {
                    g = g.hadamard(mask)?;
                }
                let q = tape.classifier_pre.as_ref().expect("dense classifier records Q");
                let dq = g.hadamard(&spec.g_act.grad(q))?;
                let w = params.classifier.as_ref().expect("checked against spec");
                let gw = grads.classifier.as_mut().expect("same layout as params");
                let mut offset = 0;
                for &i in &ids {
                    let b = tape.block(i);
                    let f = b.cols();
                    gemm_tn_acc(b.view(), dq.view(), gw.rows_mut(offset, f));
                    if i > 0 {
                        accumulate_nt(&mut dh[i], &dq, w.rows_view(offset, f));
                    }
                    offset += f;
                }
            }
        }
    }

    for layer in (0..depth).rev() {
        let Some(mut d) = dh[layer + 1].take() else {
            continue;
        };
        if let Some(mask) = &tape.masks[layer] {
            d = d.hadamard(mask)?;
        }
        let dz = d.hadamard(&spec.f_act.grad(&tape.pre_activations[layer]))?;
        let w = &params.layers[layer];
        let gw = &mut grads.layers[layer];
        match spec.arch {
            Architecture::VanillaGcn => {
                let dp = lt.spmm(&dz)?;
                gemm_tn_acc(tape.block(layer).view(), dp.view(), gw.as_mut_slice());
                if layer > 0 {
                    accumulate_nt(&mut dh[layer], &dp, w.view());
                }
            }
            Architecture::Snowball => {
                let dp = lt.spmm(&dz)?;
                let mut offset = 0;
                for i in 0..=layer {
                    let b = tape.block(i);
                    let f = b.cols();
                    gemm_tn_acc(b.view(), dp.view(), gw.rows_mut(offset, f));
                    if i > 0 {
                        accumulate_nt(&mut dh[i], &dp, w.rows_view(offset, f));
                    }
                    offset += f;
                }
            }
            Architecture::TruncatedKrylov => {
                let h = tape.block(layer);
                let f = h.cols();
                let m = spec.n_blocks;
                let mut g = dz;
                for j in 0..m {
                    gemm_tn_acc(h.view(), g.view(), gw.rows_mut(j * f, f));
                    if layer > 0 {
                        accumulate_nt(&mut dh[layer], &g, w.rows_view(j * f, f));
                    }
                    if j + 1 < m {
                        g = lt.spmm(&g)?;
                    }
                }
            }
        }
    }
    Ok(grads)
}

fn accumulate_nt(slot: &mut Option<DenseMatrix>, a: &DenseMatrix, b: crate::linalg::MatRef<'_>) {
    let acc = slot.get_or_insert_with(|| DenseMatrix::zeros(a.rows(), b.rows));
    gemm_nt_acc(a.view(), b, acc.as_mut_slice());
}

fn add_into(slot: &mut Option<DenseMatrix>, g: DenseMatrix) -> Result<()> {
    match slot {
        Some(acc) => acc.add_assign(&g),
        None => {
            *slot = Some(g);
            Ok(())
        }
    }
}
