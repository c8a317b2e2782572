//! Numerical self-checks shared by the `selftest` command and the test
//! suites: finite-difference gradients, the Krylov rewrite of the linear
//! snowball network, and the rank properties of ReLU, tanh and repeated
//! diffusion.

use rand::seq::SliceRandom;
use rand::Rng as _;
use serde::Serialize;

use crate::error::Result;
use crate::graph::{build_graph, connected_components, diffusion, erdos_renyi, DiffusionKind, Graph};
use crate::linalg::{gemm, numerical_rank, spectrum, Activation, DenseMatrix, SparseMatrix, SpectrumMethod};
use crate::nn::{
    backward, collapse_linear_snowball, forward, init_params, InitScheme, ModelParams, ModelSpec,
    Mode,
};
use crate::rng::{derive_seed, normal_matrix, seeded};
use crate::training::masked_cross_entropy;

pub const GRAD_CHECK_STEP: f64 = 1e-5;
pub const GRAD_CHECK_TOL: f64 = 1e-5;
/// Gradients smaller than this are compared in absolute terms.
pub const GRAD_CHECK_FLOOR: f64 = 1e-8;
pub const EQUIVALENCE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Serialize)]
pub struct GradCheck {
    pub label: String,
    pub n_params: usize,
    pub max_rel_error: f64,
    /// `(matrix, row, col)` of the worst entry.
    pub worst: (usize, usize, usize),
}

/// Random 12-node connected graph with its renormalized operator.
pub fn small_graph(n: usize, seed: u64) -> Result<(Graph, SparseMatrix)> {
    let mut rng = seeded(seed);
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng);
    let mut edges: Vec<(usize, usize)> = order.windows(2).map(|w| (w[0], w[1])).collect();
    for u in 0..n {
        for v in u + 1..n {
            if rng.random_bool(0.2) {
                edges.push((u, v));
            }
        }
    }
    let g = build_graph(&edges, n)?;
    let l = diffusion(&g, DiffusionKind::RenormalizedAdjacency).matrix;
    Ok((g, l))
}

/// Compares [`backward`] against central differences of the masked
/// cross-entropy, entry by entry. Dropout masks are replayed by reseeding
/// the training stream for every evaluation.
pub fn gradient_check(
    label: &str,
    spec: &ModelSpec,
    l: &SparseMatrix,
    x: &DenseMatrix,
    labels: &[usize],
    seed: u64,
) -> Result<GradCheck> {
    let params = init_params(spec, InitScheme::GlorotUniform, derive_seed(seed, 0));
    let mask: Vec<usize> = (0..x.rows()).collect();
    let drop_seed = derive_seed(seed, 1);
    let loss = |p: &ModelParams| -> Result<f64> {
        let mut rng = seeded(drop_seed);
        let (logits, _) = forward(l, x, p, spec, Mode::Train(&mut rng))?;
        Ok(masked_cross_entropy(&logits, labels, &mask)?.0)
    };
    let mut rng = seeded(drop_seed);
    let (logits, tape) = forward(l, x, &params, spec, Mode::Train(&mut rng))?;
    let (_, grad_logits) = masked_cross_entropy(&logits, labels, &mask)?;
    let grads = backward(&tape, &params, spec, &grad_logits)?;

    let mut worst = (0, 0, 0);
    let mut max_rel = 0.0f64;
    let n_mats = params.matrices().len();
    for k in 0..n_mats {
        let (rows, cols) = params.matrices()[k].shape();
        for i in 0..rows {
            for j in 0..cols {
                let mut up = params.clone();
                let mut dn = params.clone();
                let w = params.matrices()[k].get(i, j);
                up.matrices_mut()[k].set(i, j, w + GRAD_CHECK_STEP);
                dn.matrices_mut()[k].set(i, j, w - GRAD_CHECK_STEP);
                let numeric = (loss(&up)? - loss(&dn)?) / (2.0 * GRAD_CHECK_STEP);
                let analytic = grads.matrices()[k].get(i, j);
                let rel = (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(GRAD_CHECK_FLOOR);
                if rel > max_rel {
                    max_rel = rel;
                    worst = (k, i, j);
                }
            }
        }
    }
    Ok(GradCheck {
        label: label.into(),
        n_params: params.n_params(),
        max_rel_error: max_rel,
        worst,
    })
}

/// The three networks at check size: 12 nodes, 5 features, two hidden
/// layers of width 7, three Krylov blocks, 3 classes.
pub fn gradient_check_specs() -> Vec<(String, ModelSpec)> {
    let (f, h, d, m, c) = (5, 7, 2, 3, 3);
    vec![
        ("vanilla_gcn".into(), ModelSpec::vanilla(f, h, d, c, Activation::Relu)),
        ("snowball".into(), ModelSpec::snowball(f, h, d, c)),
        ("truncated_krylov".into(), ModelSpec::truncated_krylov(f, h, d, m, c)),
    ]
}

/// Runs [`gradient_check`] for every spec of [`gradient_check_specs`].
pub fn gradient_checks(seed: u64) -> Result<Vec<GradCheck>> {
    let (_, l) = small_graph(12, derive_seed(seed, 10))?;
    let x = normal_matrix(12, 5, 1.0, &mut seeded(derive_seed(seed, 11)));
    let mut rng = seeded(derive_seed(seed, 12));
    let labels: Vec<usize> = (0..12).map(|_| rng.random_range(0..3)).collect();
    gradient_check_specs()
        .iter()
        .map(|(name, spec)| gradient_check(name, spec, &l, &x, &labels, seed))
        .collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct EquivalenceCheck {
    pub instances: usize,
    pub max_rel_deviation: f64,
}

/// Direct linear snowball logits against `L^p · K · W_eq · W_C` on random
/// instances with `N ≤ 50` and depth `≤ 4`.
pub fn equivalence_check(instances: usize, seed: u64) -> Result<EquivalenceCheck> {
    let mut worst = 0.0f64;
    for t in 0..instances as u64 {
        let s = derive_seed(seed, t);
        let mut rng = seeded(s);
        let n = rng.random_range(5..=50);
        let depth = rng.random_range(0..=4);
        let f = rng.random_range(1..=6);
        let width = rng.random_range(1..=6);
        let classes = rng.random_range(2..=4);
        let g = erdos_renyi(n, rng.random_range(0.05..0.4), derive_seed(s, 1))?;
        let l = diffusion(&g, DiffusionKind::RenormalizedAdjacency).matrix;
        let x = normal_matrix(n, f, 1.0, &mut rng);
        let mut spec = ModelSpec::linear_snowball(f, width, depth, classes);
        spec.hidden = (0..depth).map(|_| rng.random_range(1..=6)).collect();
        if t % 2 == 1 {
            spec.classifier = crate::nn::Classifier::Dense {
                width: rng.random_range(1..=6),
            };
        }
        if t % 4 == 3 {
            spec.p = 0;
        }
        let params = init_params(&spec, InitScheme::Normal { sigma: 1.0 }, derive_seed(s, 2));
        let (direct, _) = forward(&l, &x, &params, &spec, Mode::Eval)?;
        let (k, w_eq) = collapse_linear_snowball(&params, &spec, &l, &x)?;
        let mut krylov = gemm(&gemm(&k, &w_eq)?, &params.output)?;
        if spec.p == 1 {
            krylov = l.spmm(&krylov)?;
        }
        let scale = direct.max_abs().max(f64::MIN_POSITIVE);
        worst = worst.max(direct.max_abs_diff(&krylov)? / scale);
    }
    Ok(EquivalenceCheck {
        instances,
        max_rel_deviation: worst,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct PairRankCheck {
    pub trials: usize,
    /// Fraction with rank 2 after tanh.
    pub tanh_restored: f64,
    /// Fraction with rank 1 after ReLU, positive coefficient.
    pub relu_positive_kept: f64,
    /// Fraction with rank 2 after ReLU, negative coefficient.
    pub relu_negative_restored: f64,
}

/// Pairs `x = c·y` with `y ∈ R^20` Gaussian: tanh separates them almost
/// surely, ReLU cannot when `c > 0`.
pub fn pair_rank_check(trials: usize, seed: u64) -> Result<PairRankCheck> {
    let dim = 20;
    let mut rng = seeded(seed);
    let (mut tanh2, mut relu1, mut relu_neg2) = (0usize, 0usize, 0usize);
    for _ in 0..trials {
        let y = normal_matrix(dim, 1, 1.0, &mut rng);
        let c_tanh: f64 = rng.random_range(-3.0..3.0);
        let c_pos: f64 = rng.random_range(0.1..10.0);
        let c_neg: f64 = -rng.random_range(0.1..10.0);
        let pair = |c: f64| DenseMatrix::hstack(&[&y.scaled(c), &y]).expect("same rows");
        if numerical_rank(&Activation::Tanh.apply(&pair(c_tanh)), None)? == 2 {
            tanh2 += 1;
        }
        if numerical_rank(&Activation::Relu.apply(&pair(c_pos)), None)? == 1 {
            relu1 += 1;
        }
        if numerical_rank(&Activation::Relu.apply(&pair(c_neg)), None)? == 2 {
            relu_neg2 += 1;
        }
    }
    let t = trials.max(1) as f64;
    Ok(PairRankCheck {
        trials,
        tanh_restored: tanh2 as f64 / t,
        relu_positive_kept: relu1 as f64 / t,
        relu_negative_restored: relu_neg2 as f64 / t,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct DiffusionLimitCase {
    pub n_nodes: usize,
    pub components: usize,
    pub power_rank: usize,
    pub unit_multiplicity: usize,
}

/// A graph made of `k` dense random components, each kept connected by a
/// random path through its nodes.
pub fn component_graph(k: usize, seed: u64) -> Result<Graph> {
    let mut rng = seeded(seed);
    let sizes: Vec<usize> = (0..k).map(|_| rng.random_range(10..=60)).collect();
    let n: usize = sizes.iter().sum();
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng);
    let mut edges = Vec::new();
    let mut start = 0;
    for &s in &sizes {
        let nodes = &order[start..start + s];
        edges.extend(nodes.windows(2).map(|w| (w[0], w[1])));
        for a in 0..s {
            for b in a + 1..s {
                if rng.random_bool(0.3) {
                    edges.push((nodes[a], nodes[b]));
                }
            }
        }
        start += s;
    }
    build_graph(&edges, n)
}

/// Repeated diffusion `(L/λ_max)^power X` collapses onto the top
/// eigenspace, whose dimension is the number of components.
pub fn diffusion_limit_check(graphs: usize, power: usize, seed: u64) -> Result<Vec<DiffusionLimitCase>> {
    let mut cases = Vec::with_capacity(graphs);
    for t in 0..graphs {
        let s = derive_seed(seed, t as u64);
        let k = t % 3 + 1;
        let g = component_graph(k, s)?;
        let (components, _) = connected_components(&g);
        let l = diffusion(&g, DiffusionKind::RenormalizedAdjacency).matrix;
        let ev = spectrum(&l, SpectrumMethod::DenseFull)?;
        let lmax = ev.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let unit = ev.iter().filter(|v| (*v - 1.0).abs() <= 1e-8).count();
        let scaled = l.scale_shift(1.0 / lmax, 0.0)?;
        let mut y = normal_matrix(g.n_nodes(), 8, 1.0, &mut seeded(derive_seed(s, 1)));
        for _ in 0..power {
            y = scaled.spmm(&y)?;
        }
        cases.push(DiffusionLimitCase {
            n_nodes: g.n_nodes(),
            components,
            power_rank: numerical_rank(&y, None)?,
            unit_multiplicity: unit,
        });
    }
    Ok(cases)
}

#[derive(Debug, Clone, Serialize)]
pub struct CheckOutcome {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

/// Every check with its pass threshold.
pub fn run_selftest(seed: u64) -> Result<Vec<CheckOutcome>> {
    let mut out = Vec::new();
    for g in gradient_checks(seed)? {
        out.push(CheckOutcome {
            name: format!("gradient/{}", g.label),
            passed: g.max_rel_error < GRAD_CHECK_TOL,
            detail: format!("max relative error {:.3e} over {} weights", g.max_rel_error, g.n_params),
        });
    }
    let eq = equivalence_check(50, seed)?;
    out.push(CheckOutcome {
        name: "krylov_equivalence".into(),
        passed: eq.max_rel_deviation < EQUIVALENCE_TOL,
        detail: format!("max relative deviation {:.3e} over {} instances", eq.max_rel_deviation, eq.instances),
    });
    let pr = pair_rank_check(1000, seed)?;
    out.push(CheckOutcome {
        name: "tanh_restores_rank".into(),
        passed: pr.tanh_restored >= 0.99,
        detail: format!("{:.1}% of {} pairs", pr.tanh_restored * 100.0, pr.trials),
    });
    out.push(CheckOutcome {
        name: "relu_keeps_rank_one".into(),
        passed: pr.relu_positive_kept == 1.0,
        detail: format!("{:.1}% of {} pairs", pr.relu_positive_kept * 100.0, pr.trials),
    });
    let cases = diffusion_limit_check(20, 500, seed)?;
    let ok = cases
        .iter()
        .all(|c| c.power_rank <= c.components && c.unit_multiplicity == c.components);
    out.push(CheckOutcome {
        name: "diffusion_limit".into(),
        passed: ok,
        detail: format!(
            "{} graphs; (power rank, components, unit multiplicity): {}",
            cases.len(),
            cases
                .iter()
                .map(|c| format!("({},{},{})", c.power_rank, c.components, c.unit_multiplicity))
                .collect::<Vec<_>>()
                .join(" ")
        ),
    });
    Ok(out)
}
