use rand::Rng as _;

use crate::error::{shape_err, Result};
use crate::linalg::{gemm_acc, Activation, DenseMatrix, SparseMatrix};
use crate::nn::{Architecture, Classifier, ModelParams, ModelSpec};
use crate::rng::Rng;

/// Evaluation runs without dropout; training draws fresh masks from the
/// given stream.
pub enum Mode<'r> {
    Eval,
    Train(&'r mut Rng),
}

/// Intermediates kept by a forward pass for [`crate::nn::backward`].
#[derive(Debug, Clone)]
pub struct ForwardTape<'a> {
    pub(crate) operator: &'a SparseMatrix,
    pub(crate) input: &'a DenseMatrix,
    /// `H_1 … H_n` after activation and dropout.
    pub hidden: Vec<DenseMatrix>,
    /// `Z_0 … Z_{n−1}`, the inputs of `f`.
    pub pre_activations: Vec<DenseMatrix>,
    /// Inverted-dropout scale per hidden block, `None` when no dropout ran.
    pub masks: Vec<Option<DenseMatrix>>,
    /// Input of `g` for a dense classifier.
    pub classifier_pre: Option<DenseMatrix>,
    /// Materialized classifier blocks. Empty when `C` is the hidden blocks
    /// themselves (identity classifier with identity `g`).
    pub classifier_out: Vec<DenseMatrix>,
    pub classifier_mask: Option<DenseMatrix>,
}

impl<'a> ForwardTape<'a> {
    /// `H_i`, with `H_0 = X`.
    pub fn block(&self, i: usize) -> &DenseMatrix {
        if i == 0 {
            self.input
        } else {
            &self.hidden[i - 1]
        }
    }

    pub fn operator(&self) -> &'a SparseMatrix {
        self.operator
    }

    /// The classifier input `C`, concatenated. For the vanilla GCN this is
    /// the last hidden block.
    pub fn classifier_input(&self, spec: &ModelSpec) -> DenseMatrix {
        let blocks = c_blocks(self, spec);
        DenseMatrix::hstack(&blocks).expect("classifier blocks share the row count")
    }
}

/// Indices of the hidden blocks feeding the classifier.
pub(crate) fn classifier_block_ids(spec: &ModelSpec) -> Vec<usize> {
    match spec.arch {
        Architecture::Snowball => (0..=spec.depth()).collect(),
        _ => vec![spec.depth()],
    }
}

pub(crate) fn c_blocks<'t>(tape: &'t ForwardTape<'_>, spec: &ModelSpec) -> Vec<&'t DenseMatrix> {
    if tape.classifier_out.is_empty() {
        classifier_block_ids(spec)
            .into_iter()
            .map(|i| tape.block(i))
            .collect()
    } else {
        tape.classifier_out.iter().collect()
    }
}

/// `Σ_i blocks[i] · W[rows of block i]`.
pub(crate) fn blocks_times(blocks: &[&DenseMatrix], w: &DenseMatrix) -> DenseMatrix {
    let n = blocks.first().map_or(0, |b| b.rows());
    let mut out = DenseMatrix::zeros(n, w.cols());
    let mut offset = 0;
    for b in blocks {
        gemm_acc(b.view(), w.rows_view(offset, b.cols()), out.as_mut_slice());
        offset += b.cols();
    }
    debug_assert_eq!(offset, w.rows());
    out
}

/// Vanilla pre-activation `L H W`.
pub fn vanilla_layer(l: &SparseMatrix, h: &DenseMatrix, w: &DenseMatrix) -> Result<DenseMatrix> {
    check_rows(h.cols(), w, "vanilla layer")?;
    l.spmm(&blocks_times(&[h], w))
}

/// Snowball pre-activation `L [H_0, …, H_l] W`, without forming the
/// concatenation.
pub fn snowball_layer(l: &SparseMatrix, blocks: &[&DenseMatrix], w: &DenseMatrix) -> Result<DenseMatrix> {
    check_rows(blocks.iter().map(|b| b.cols()).sum(), w, "snowball layer")?;
    l.spmm(&blocks_times(blocks, w))
}

/// Truncated Krylov pre-activation `[H, LH, …, L^{m−1}H] W`, evaluated as
/// `Σ_j L^j (H W^j)` by Horner's rule so only one `N × F_{l+1}` product with
/// `L` is needed per block.
pub fn truncated_layer(l: &SparseMatrix, h: &DenseMatrix, w: &DenseMatrix, m: usize) -> Result<DenseMatrix> {
    if m == 0 {
        return shape_err("truncated layer needs at least one block");
    }
    check_rows(m * h.cols(), w, "truncated layer")?;
    let f = h.cols();
    let part = |j: usize| {
        let mut out = DenseMatrix::zeros(h.rows(), w.cols());
        gemm_acc(h.view(), w.rows_view(j * f, f), out.as_mut_slice());
        out
    };
    let mut acc = part(m - 1);
    for j in (0..m - 1).rev() {
        acc = l.spmm(&acc)?;
        acc.add_assign(&part(j))?;
    }
    Ok(acc)
}

fn check_rows(rows: usize, w: &DenseMatrix, what: &str) -> Result<()> {
    if rows != w.rows() {
        return shape_err(format!("{what}: input width {rows} but weight has {} rows", w.rows()));
    }
    Ok(())
}

fn dropout_mask(rows: usize, cols: usize, rate: f64, rng: &mut Rng) -> DenseMatrix {
    let keep = 1.0 / (1.0 - rate);
    DenseMatrix::from_fn(rows, cols, |_, _| if rng.random::<f64>() < rate { 0.0 } else { keep })
}

/// Runs the network described by `spec`.
///
/// In training mode, inverted dropout is applied to every hidden block
/// after its activation, and to `C` when the classifier is dense and
/// `spec.dropout_classifier` is set. The input `X` is never dropped.
pub fn forward<'a>(
    l: &'a SparseMatrix,
    x: &'a DenseMatrix,
    params: &ModelParams,
    spec: &ModelSpec,
    mut mode: Mode<'_>,
) -> Result<(DenseMatrix, ForwardTape<'a>)> {
    spec.validate()?;
    params.check(spec)?;
    if l.rows() != l.cols() || l.rows() != x.rows() {
        return shape_err(format!(
            "operator {}x{} with features {}x{}",
            l.rows(),
            l.cols(),
            x.rows(),
            x.cols()
        ));
    }
    if x.cols() != spec.input_dim {
        return shape_err(format!("features have {} columns, model expects {}", x.cols(), spec.input_dim));
    }
    let rate = match mode {
        Mode::Train(_) if spec.dropout > 0.0 => spec.dropout,
        _ => 0.0,
    };
    let mut tape = ForwardTape {
        operator: l,
        input: x,
        hidden: Vec::with_capacity(spec.depth()),
        pre_activations: Vec::with_capacity(spec.depth()),
        masks: Vec::with_capacity(spec.depth()),
        classifier_pre: None,
        classifier_out: Vec::new(),
        classifier_mask: None,
    };

    for (layer, w) in params.layers.iter().enumerate() {
        let z = match spec.arch {
            Architecture::VanillaGcn => vanilla_layer(l, tape.block(layer), w)?,
            Architecture::Snowball => {
                let blocks: Vec<&DenseMatrix> = (0..=layer).map(|i| tape.block(i)).collect();
                snowball_layer(l, &blocks, w)?
            }
            Architecture::TruncatedKrylov => truncated_layer(l, tape.block(layer), w, spec.n_blocks)?,
        };
        let mut h = spec.f_act.apply(&z);
        let mask = match (&mut mode, rate > 0.0) {
            (Mode::Train(rng), true) => {
                let m = dropout_mask(h.rows(), h.cols(), rate, rng);
                h = h.hadamard(&m)?;
                Some(m)
            }
            _ => None,
        };
        tape.pre_activations.push(z);
        tape.hidden.push(h);
        tape.masks.push(mask);
    }

    if spec.arch == Architecture::VanillaGcn {
        let logits = vanilla_layer(l, tape.block(spec.depth()), &params.output)?;
        return Ok((logits, tape));
    }

    let ids = classifier_block_ids(spec);
    match spec.classifier {
        Classifier::Identity => {
            if spec.g_act != Activation::Identity {
                tape.classifier_out = ids.iter().map(|&i| spec.g_act.apply(tape.block(i))).collect();
            }
        }
        Classifier::Dense { .. } => {
            let blocks: Vec<&DenseMatrix> = ids.iter().map(|&i| tape.block(i)).collect();
            let w = params.classifier.as_ref().expect("checked against spec");
            let q = blocks_times(&blocks, w);
            let mut c = spec.g_act.apply(&q);
            if let (Mode::Train(rng), true) = (&mut mode, rate > 0.0 && spec.dropout_classifier) {
                let m = dropout_mask(c.rows(), c.cols(), rate, rng);
                c = c.hadamard(&m)?;
                tape.classifier_mask = Some(m);
            }
            tape.classifier_pre = Some(q);
            tape.classifier_out = vec![c];
        }
    }
    let mut logits = blocks_times(&c_blocks(&tape, spec), &params.output);
    if spec.p == 1 {
        logits = l.spmm(&logits)?;
    }
    Ok((logits, tape))
}

/// Vanilla GCN in evaluation mode; widths are read off `params`.
pub fn forward_vanilla<'a>(
    l: &'a SparseMatrix,
    x: &'a DenseMatrix,
    params: &ModelParams,
    depth: usize,
    act: Activation,
) -> Result<(DenseMatrix, ForwardTape<'a>)> {
    if params.layers.len() != depth {
        return shape_err(format!("depth {depth} but {} hidden weights", params.layers.len()));
    }
    let spec = ModelSpec {
        hidden: params.layers.iter().map(|w| w.cols()).collect(),
        ..ModelSpec::vanilla(x.cols(), 1, 0, params.output.cols(), act)
    };
    forward(l, x, params, &spec, Mode::Eval)
}

/// Snowball network in evaluation mode.
pub fn forward_snowball<'a>(
    l: &'a SparseMatrix,
    x: &'a DenseMatrix,
    params: &ModelParams,
    spec: &ModelSpec,
) -> Result<(DenseMatrix, ForwardTape<'a>)> {
    if spec.arch != Architecture::Snowball {
        return shape_err(format!("forward_snowball called with {}", spec.arch));
    }
    forward(l, x, params, spec, Mode::Eval)
}

/// Truncated Krylov network in evaluation mode.
pub fn forward_truncated_krylov<'a>(
    l: &'a SparseMatrix,
    x: &'a DenseMatrix,
    params: &ModelParams,
    spec: &ModelSpec,
) -> Result<(DenseMatrix, ForwardTape<'a>)> {
    if spec.arch != Architecture::TruncatedKrylov {
        return shape_err(format!("forward_truncated_krylov called with {}", spec.arch));
    }
    forward(l, x, params, spec, Mode::Eval)
}
