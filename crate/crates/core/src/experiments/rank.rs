use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{diffusion, erdos_renyi, DiffusionKind};
use crate::linalg::{numerical_rank, Activation, DenseMatrix, SparseMatrix};
use crate::nn::{snowball_layer, truncated_layer, vanilla_layer, Architecture};
use crate::rng::{derive_seed, normal_matrix, seeded};
use crate::training::mean_std;

/// Setup of the random deep-network rank simulation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RankExperiment {
    pub arch: Architecture,
    pub activation: Activation,
    #[serde(default = "d_depth")]
    pub depth: usize,
    #[serde(default = "d_reps")]
    pub reps: usize,
    #[serde(default = "d_nodes")]
    pub n_nodes: usize,
    #[serde(default = "d_p")]
    pub edge_prob: f64,
    #[serde(default = "d_in")]
    pub input_dim: usize,
    #[serde(default = "d_width")]
    pub width: usize,
    /// Krylov blocks per layer for the truncated architecture.
    #[serde(default = "d_blocks")]
    pub n_blocks: usize,
    /// Rank threshold; `None` uses the default relative threshold.
    #[serde(default)]
    pub tolerance: Option<f64>,
    #[serde(default)]
    pub seed: u64,
}

fn d_depth() -> usize {
    100
}
fn d_reps() -> usize {
    20
}
fn d_nodes() -> usize {
    1000
}
fn d_p() -> f64 {
    0.01
}
fn d_in() -> usize {
    500
}
fn d_width() -> usize {
    128
}
fn d_blocks() -> usize {
    3
}

impl RankExperiment {
    /// 100 layers of width 128 over `G(1000, 0.01)` with 500 Gaussian input
    /// features, 20 repetitions.
    pub fn standard(arch: Architecture, activation: Activation, seed: u64) -> Self {
        Self {
            arch,
            activation,
            depth: d_depth(),
            reps: d_reps(),
            n_nodes: d_nodes(),
            edge_prob: d_p(),
            input_dim: d_in(),
            width: d_width(),
            n_blocks: d_blocks(),
            tolerance: None,
            seed,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.depth == 0 || self.reps == 0 || self.n_nodes == 0 || self.input_dim == 0 || self.width == 0 {
            return Err(Error::BadConfig("rank experiment sizes must be positive".into()));
        }
        if self.arch == Architecture::TruncatedKrylov && self.n_blocks == 0 {
            return Err(Error::BadConfig("n_blocks must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankTrace {
    pub arch: Architecture,
    pub activation: Activation,
    /// `None` means the default relative threshold was used per layer.
    pub tolerance: Option<f64>,
    pub feature_normalization: String,
    /// Mean rank of `H_1 … H_depth` over repetitions.
    pub mean: Vec<f64>,
    /// Population standard deviation, same indexing as `mean`.
    pub std: Vec<f64>,
    /// `per_rep[r][l]` is the rank of `H_{l+1}` in repetition `r`.
    pub per_rep: Vec<Vec<usize>>,
    pub seeds: Vec<u64>,
    pub config: RankExperiment,
}

impl RankTrace {
    pub const CSV_HEADER: &'static str = "arch,activation,layer,mean,std";

    /// One CSV row per layer, without the header.
    pub fn csv_rows(&self) -> Vec<String> {
        self.mean
            .iter()
            .zip(&self.std)
            .enumerate()
            .map(|(l, (m, s))| format!("{},{},{},{:.6},{:.6}", self.arch, self.activation, l + 1, m, s))
            .collect()
    }
}

/// Runs every repetition, `jobs` at a time, and aggregates the traces.
pub fn rank_experiment(cfg: &RankExperiment, jobs: usize) -> Result<RankTrace> {
    cfg.validate()?;
    let seeds: Vec<u64> = (0..cfg.reps as u64).map(|r| derive_seed(cfg.seed, r)).collect();
    let per_rep: Vec<Vec<usize>> = if jobs <= 1 {
        seeds.iter().map(|&s| rank_repetition(cfg, s)).collect::<Result<_>>()?
    } else {
        use rayon::prelude::*;
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build()
            .map_err(|e| Error::BadConfig(format!("thread pool: {e}")))?;
        pool.install(|| seeds.par_iter().map(|&s| rank_repetition(cfg, s)).collect::<Result<_>>())?
    };
    let mut mean = Vec::with_capacity(cfg.depth);
    let mut std = Vec::with_capacity(cfg.depth);
    for l in 0..cfg.depth {
        let vals: Vec<f64> = per_rep.iter().map(|r| r[l] as f64).collect();
        let (m, s) = mean_std(&vals);
        mean.push(m);
        std.push(s);
    }
    Ok(RankTrace {
        arch: cfg.arch,
        activation: cfg.activation,
        tolerance: cfg.tolerance,
        feature_normalization: "row_sum".into(),
        mean,
        std,
        per_rep,
        seeds,
        config: cfg.clone(),
    })
}

/// Graph and features of one repetition: renormalized adjacency of a fresh
/// Erdős–Rényi graph and Gaussian features scaled to unit row sums.
pub fn rank_inputs(cfg: &RankExperiment, seed: u64) -> Result<(SparseMatrix, DenseMatrix)> {
    let g = erdos_renyi(cfg.n_nodes, cfg.edge_prob, derive_seed(seed, 0))?;
    let l = diffusion(&g, DiffusionKind::RenormalizedAdjacency).matrix;
    let mut x = normal_matrix(cfg.n_nodes, cfg.input_dim, 1.0, &mut seeded(derive_seed(seed, 1)));
    x.row_normalize();
    Ok((l, x))
}

/// Ranks of `H_1 … H_depth` for one draw of graph, features and weights.
/// Weights are drawn layer by layer from `N(0, 1)`.
pub fn rank_repetition(cfg: &RankExperiment, seed: u64) -> Result<Vec<usize>> {
    let (l, x) = rank_inputs(cfg, seed)?;
    let mut wrng = seeded(derive_seed(seed, 2));
    let mut blocks: Vec<DenseMatrix> = vec![x];
    let mut in_width = cfg.input_dim;
    let mut ranks = Vec::with_capacity(cfg.depth);
    for _ in 0..cfg.depth {
        let last = blocks.last().expect("at least the input block");
        let z = match cfg.arch {
            Architecture::VanillaGcn => {
                let w = normal_matrix(last.cols(), cfg.width, 1.0, &mut wrng);
                vanilla_layer(&l, last, &w)?
            }
            Architecture::Snowball => {
                let w = normal_matrix(in_width, cfg.width, 1.0, &mut wrng);
                let refs: Vec<&DenseMatrix> = blocks.iter().collect();
                snowball_layer(&l, &refs, &w)?
            }
            Architecture::TruncatedKrylov => {
                let w = normal_matrix(cfg.n_blocks * last.cols(), cfg.width, 1.0, &mut wrng);
                truncated_layer(&l, last, &w, cfg.n_blocks)?
            }
        };
        let h = cfg.activation.apply(&z);
        if !h.is_finite() {
            return Err(Error::Numerical(format!(
                "hidden features overflowed at layer {}",
                ranks.len() + 1
            )));
        }
        ranks.push(numerical_rank(&h, cfg.tolerance)?);
        in_width += h.cols();
        if cfg.arch == Architecture::Snowball {
            blocks.push(h);
        } else {
            blocks = vec![h];
        }
    }
    Ok(ranks)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(arch: Architecture, act: Activation) -> RankExperiment {
        RankExperiment {
            depth: 6,
            reps: 2,
            n_nodes: 120,
            edge_prob: 0.05,
            input_dim: 40,
            width: 16,
            ..RankExperiment::standard(arch, act, 4)
        }
    }

    #[test]
    fn trace_shape_and_bounds() {
        for arch in [Architecture::VanillaGcn, Architecture::Snowball, Architecture::TruncatedKrylov] {
            let t = rank_experiment(&small(arch, Activation::Tanh), 1).unwrap();
            assert_eq!(t.mean.len(), 6);
            assert!(t.mean.iter().all(|&m| (0.0..=16.0).contains(&m)));
            assert!(t.std.iter().all(|&s| s >= 0.0));
            assert_eq!(t.csv_rows().len(), 6);
        }
    }

    #[test]
    fn reproducible_and_parallel_invariant() {
        let cfg = small(Architecture::VanillaGcn, Activation::Relu);
        let a = rank_experiment(&cfg, 1).unwrap();
        let b = rank_experiment(&cfg, 2).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn first_truncated_layer_full_rank() {
        let t = rank_experiment(&small(Architecture::TruncatedKrylov, Activation::Relu), 1).unwrap();
        assert!(t.per_rep.iter().all(|r| r[0] == 16));
    }

    #[test]
    fn unit_row_sums() {
        let cfg = small(Architecture::VanillaGcn, Activation::Relu);
        let (_, x) = rank_inputs(&cfg, 1).unwrap();
        for i in 0..x.rows() {
            assert!((x.row(i).iter().sum::<f64>() - 1.0).abs() < 1e-9);
        }
    }
}
