//! Full-batch training with early stopping, repeated over seeds.

mod loss;
mod optim;

use std::time::Instant;

use serde::{Deserialize, Serialize};

pub use loss::{accuracy, masked_cross_entropy, predictions};
pub use optim::{adam_step, rmsprop_step, Optimizer, OptimizerState};

use crate::dataset::GraphDataset;
use crate::error::{Error, Result};
use crate::graph::{diffusion, make_split, DiffusionKind, SplitMode, SplitSpec};
use crate::linalg::{DenseMatrix, SparseMatrix};
use crate::nn::{backward, forward, init_params, Architecture, InitScheme, ModelParams, ModelSpec, Mode};
use crate::rng::{derive_seed, seeded};

pub const DEFAULT_MAX_EPISODES: usize = 3000;
pub const DEFAULT_PATIENCE: usize = 100;
pub const DEFAULT_RUNS: usize = 10;
/// Minimum drop in training loss that resets patience without validation.
pub const NO_VALIDATION_MIN_DELTA: f64 = 1e-4;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Hyperparams {
    pub lr: f64,
    pub weight_decay: f64,
    pub hidden: usize,
    /// Depth for snowball networks, blocks per layer for truncated Krylov.
    pub layers_or_blocks: usize,
    pub dropout: f64,
    pub optimizer: Optimizer,
    #[serde(default = "default_max_episodes")]
    pub max_episodes: usize,
    #[serde(default = "default_patience")]
    pub patience: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_runs")]
    pub runs: usize,
    /// Resample this split for every run. `None` uses the split stored with
    /// the dataset.
    #[serde(default)]
    pub split: Option<SplitMode>,
}

fn default_max_episodes() -> usize {
    DEFAULT_MAX_EPISODES
}
fn default_patience() -> usize {
    DEFAULT_PATIENCE
}
fn default_runs() -> usize {
    DEFAULT_RUNS
}

impl Hyperparams {
    pub fn new(lr: f64, weight_decay: f64, hidden: usize, layers_or_blocks: usize, dropout: f64, optimizer: Optimizer) -> Self {
        Self {
            lr,
            weight_decay,
            hidden,
            layers_or_blocks,
            dropout,
            optimizer,
            max_episodes: DEFAULT_MAX_EPISODES,
            patience: DEFAULT_PATIENCE,
            seed: 0,
            runs: DEFAULT_RUNS,
            split: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::BadConfig(m));
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return bad(format!("lr must be positive, got {}", self.lr));
        }
        if !(self.weight_decay >= 0.0 && self.weight_decay.is_finite()) {
            return bad(format!("weight_decay must be non-negative, got {}", self.weight_decay));
        }
        if self.hidden == 0 || self.layers_or_blocks == 0 {
            return bad("hidden and layers_or_blocks must be positive".into());
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return bad(format!("dropout must lie in [0, 1), got {}", self.dropout));
        }
        if self.max_episodes == 0 || self.runs == 0 {
            return bad("max_episodes and runs must be positive".into());
        }
        if !(1e-6..=5e-3).contains(&self.lr) {
            log::warn!("lr {} lies outside the usual search range [1e-6, 5e-3]", self.lr);
        }
        if !(1e-5..=1e-2).contains(&self.weight_decay) {
            log::warn!(
                "weight_decay {} lies outside the usual search range [1e-5, 1e-2]",
                self.weight_decay
            );
        }
        Ok(())
    }

    /// The network these hyperparameters describe for `arch`, with the
    /// standard activations (linear snowball when `linear` is set).
    ///
    /// The truncated Krylov network gets a single hidden layer with
    /// `layers_or_blocks` blocks; snowball networks get `layers_or_blocks`
    /// hidden layers.
    pub fn model_spec(&self, arch: Architecture, linear: bool, input_dim: usize, n_classes: usize) -> ModelSpec {
        let mut spec = match arch {
            Architecture::Snowball if linear => {
                ModelSpec::linear_snowball(input_dim, self.hidden, self.layers_or_blocks, n_classes)
            }
            Architecture::Snowball => ModelSpec::snowball(input_dim, self.hidden, self.layers_or_blocks, n_classes),
            Architecture::TruncatedKrylov => {
                ModelSpec::truncated_krylov(input_dim, self.hidden, 1, self.layers_or_blocks, n_classes)
            }
            Architecture::VanillaGcn => ModelSpec::vanilla(
                input_dim,
                self.hidden,
                self.layers_or_blocks,
                n_classes,
                crate::linalg::Activation::Relu,
            ),
        };
        spec.dropout = self.dropout;
        spec
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub seed: u64,
    pub test_accuracy: f64,
    pub episodes: usize,
    /// Episode (0-based) whose parameters were evaluated.
    pub best_episode: usize,
    pub best_val_accuracy: Option<f64>,
    pub final_train_loss: f64,
    pub diverged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub dataset: String,
    pub arch: Architecture,
    pub split: String,
    pub seed: u64,
    pub runs: Vec<RunResult>,
    pub accuracies: Vec<f64>,
    pub mean: f64,
    /// Population standard deviation of `accuracies`.
    pub std: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wall_time_secs: Option<f64>,
}

impl TrainReport {
    /// `dataset,arch,split,mean,std,seeds` with seeds joined by `;`.
    pub fn csv_row(&self) -> String {
        let seeds: Vec<String> = self.runs.iter().map(|r| r.seed.to_string()).collect();
        format!(
            "{},{},{},{:.6},{:.6},{}",
            self.dataset,
            self.arch,
            self.split,
            self.mean,
            self.std,
            seeds.join(";")
        )
    }

    pub const CSV_HEADER: &'static str = "dataset,arch,split,mean,std,seeds";
}

pub fn mean_std(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Accuracy of `params` on `idx` in evaluation mode.
pub fn evaluate(params: &ModelParams, spec: &ModelSpec, dataset: &GraphDataset, idx: &[usize]) -> Result<f64> {
    if idx.is_empty() {
        return Err(Error::EmptyMask);
    }
    let l = diffusion(&dataset.graph, DiffusionKind::RenormalizedAdjacency).matrix;
    let (logits, _) = forward(&l, &dataset.features, params, spec, Mode::Eval)?;
    accuracy(&logits, &dataset.labels, idx)
}

/// Trains `hp.runs` independent models and reports their test accuracy.
pub fn train(dataset: &GraphDataset, spec: &ModelSpec, hp: &Hyperparams) -> Result<TrainReport> {
    train_parallel(dataset, spec, hp, 1, true)
}

/// As [`train`], spreading runs over `jobs` threads. Per-run results do not
/// depend on `jobs`. Wall time is left out when `deterministic` is set.
pub fn train_parallel(
    dataset: &GraphDataset,
    spec: &ModelSpec,
    hp: &Hyperparams,
    jobs: usize,
    deterministic: bool,
) -> Result<TrainReport> {
    hp.validate()?;
    spec.validate()?;
    dataset.validate()?;
    let start = Instant::now();
    let l = diffusion(&dataset.graph, DiffusionKind::RenormalizedAdjacency).matrix;
    let seeds: Vec<u64> = (0..hp.runs as u64).map(|r| derive_seed(hp.seed, r)).collect();
    let one = |seed: u64| -> Result<RunResult> {
        let split = run_split(dataset, hp, seed)?;
        train_once(&l, dataset, spec, hp, &split, seed)
    };
    let runs: Vec<RunResult> = if jobs <= 1 {
        seeds.iter().map(|&s| one(s)).collect::<Result<_>>()?
    } else {
        use rayon::prelude::*;
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build()
            .map_err(|e| Error::BadConfig(format!("thread pool: {e}")))?;
        pool.install(|| seeds.par_iter().map(|&s| one(s)).collect::<Result<_>>())?
    };
    let accuracies: Vec<f64> = runs.iter().map(|r| r.test_accuracy).collect();
    let (mean, std) = mean_std(&accuracies);
    let split = hp
        .split
        .map(|m| m.label())
        .or_else(|| dataset.split.as_ref().map(|s| s.mode.label()))
        .unwrap_or_default();
    Ok(TrainReport {
        dataset: dataset.name.clone(),
        arch: spec.arch,
        split,
        seed: hp.seed,
        runs,
        accuracies,
        mean,
        std,
        wall_time_secs: (!deterministic).then(|| start.elapsed().as_secs_f64()),
    })
}

/// The split used by the run with `seed`: resampled from `hp.split` when
/// set, otherwise the split stored with the dataset.
pub fn run_split(dataset: &GraphDataset, hp: &Hyperparams, seed: u64) -> Result<SplitSpec> {
    match (hp.split, &dataset.split) {
        (Some(mode), _) => make_split(&dataset.labels, mode, derive_seed(seed, 2)),
        (None, Some(s)) => Ok(s.clone()),
        (None, None) => Err(Error::BadConfig(format!(
            "dataset '{}' stores no split and none was requested",
            dataset.name
        ))),
    }
}

/// One training run on a fixed split.
///
/// With a validation set, the parameters with the best validation accuracy
/// (lower validation loss breaking ties) are restored before testing.
/// Without one, training stops once the training loss has not dropped by
/// [`NO_VALIDATION_MIN_DELTA`] for `patience` episodes, and the final
/// parameters are tested.
pub fn train_once(
    l: &SparseMatrix,
    dataset: &GraphDataset,
    spec: &ModelSpec,
    hp: &Hyperparams,
    split: &SplitSpec,
    seed: u64,
) -> Result<RunResult> {
    Ok(train_once_with_params(l, dataset, spec, hp, split, seed)?.0)
}

/// As [`train_once`], also returning the parameters that were tested.
pub fn train_once_with_params(
    l: &SparseMatrix,
    dataset: &GraphDataset,
    spec: &ModelSpec,
    hp: &Hyperparams,
    split: &SplitSpec,
    seed: u64,
) -> Result<(RunResult, ModelParams)> {
    if split.train_idx.is_empty() || split.test_idx.is_empty() {
        return Err(Error::EmptyMask);
    }
    let x: &DenseMatrix = &dataset.features;
    let labels = &dataset.labels;
    let mut params = init_params(spec, InitScheme::GlorotUniform, derive_seed(seed, 0));
    let mut dropout_rng = seeded(derive_seed(seed, 1));
    let mut opt = OptimizerState::new(hp.optimizer, &params);
    let with_val = !split.val_idx.is_empty();

    let mut best: Option<ModelParams> = None;
    let mut best_acc = f64::NEG_INFINITY;
    let mut best_loss = f64::INFINITY;
    let mut best_episode = 0;
    let mut since_best = 0;
    let mut episodes = 0;
    let mut last_loss = f64::NAN;
    let mut diverged = false;

    for ep in 0..hp.max_episodes {
        episodes = ep + 1;
        let (logits, tape) = forward(l, x, &params, spec, Mode::Train(&mut dropout_rng))?;
        let (loss, grad) = masked_cross_entropy(&logits, labels, &split.train_idx)?;
        last_loss = loss;
        if !loss.is_finite() {
            diverged = true;
            break;
        }
        let grads = backward(&tape, &params, spec, &grad)?;
        drop(tape);
        opt.apply(&mut params, &grads, hp.lr, hp.weight_decay);
        if !params.is_finite() {
            diverged = true;
            break;
        }

        let improved = if with_val {
            let (logits, _) = forward(l, x, &params, spec, Mode::Eval)?;
            let (val_loss, _) = masked_cross_entropy(&logits, labels, &split.val_idx)?;
            let val_acc = accuracy(&logits, labels, &split.val_idx)?;
            let better = val_acc > best_acc || (val_acc == best_acc && val_loss < best_loss);
            if better {
                best_acc = val_acc;
                best_loss = val_loss;
                best = Some(params.clone());
            }
            better
        } else {
            let better = loss < best_loss - NO_VALIDATION_MIN_DELTA;
            if better {
                best_loss = loss;
            }
            better
        };
        if improved {
            best_episode = ep;
            since_best = 0;
        } else {
            since_best += 1;
        }
        if since_best >= hp.patience {
            break;
        }
    }

    let eval_params = match (with_val, best) {
        (true, Some(b)) => b,
        _ => {
            if !with_val {
                best_episode = episodes.saturating_sub(1);
            }
            params
        }
    };
    let test_accuracy = if diverged && !eval_params.is_finite() {
        0.0
    } else {
        let (logits, _) = forward(l, x, &eval_params, spec, Mode::Eval)?;
        accuracy(&logits, labels, &split.test_idx)?
    };
    log::info!(
        "{} {} seed {seed}: test accuracy {test_accuracy:.4} after {episodes} episodes",
        dataset.name,
        spec.arch
    );
    let result = RunResult {
        seed,
        test_accuracy,
        episodes,
        best_episode,
        best_val_accuracy: with_val.then_some(best_acc).filter(|a| a.is_finite()),
        final_train_loss: last_loss,
        diverged,
    };
    Ok((result, eval_params))
}
