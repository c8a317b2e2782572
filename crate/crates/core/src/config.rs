//! JSON run configurations. Unknown keys and out-of-range values are
//! rejected before any computation starts.

use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::experiments::{TableArch, Validation};
use crate::linalg::Activation;
use crate::nn::{Architecture, Classifier, ModelSpec};
use crate::training::Hyperparams;

/// Default clamp on hidden widths.
pub const DEFAULT_WIDTH_CAP: usize = 1024;

fn default_cap() -> Option<usize> {
    Some(DEFAULT_WIDTH_CAP)
}

fn one() -> usize {
    1
}

/// Architecture choice plus optional overrides of the standard settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub arch: Architecture,
    /// Identity activations for a snowball network.
    #[serde(default)]
    pub linear: bool,
    #[serde(default)]
    pub f_act: Option<Activation>,
    #[serde(default)]
    pub g_act: Option<Activation>,
    #[serde(default)]
    pub p: Option<u8>,
    #[serde(default)]
    pub classifier: Option<Classifier>,
    /// Hidden layers of a truncated Krylov network (default 1).
    #[serde(default)]
    pub truncated_layers: Option<usize>,
    #[serde(default)]
    pub dropout_classifier: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Container name (resolved under `dataset_dir` or `$KGCN_DATA`) or path.
    pub dataset: String,
    #[serde(default)]
    pub dataset_dir: Option<PathBuf>,
    pub model: ModelConfig,
    pub hyperparams: Hyperparams,
    #[serde(default = "default_cap")]
    pub width_cap: Option<usize>,
    #[serde(default)]
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub deterministic: bool,
    #[serde(default = "one")]
    pub jobs: usize,
    #[serde(default)]
    pub dump_embeddings: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchConfig {
    pub datasets: Vec<String>,
    pub splits: Vec<String>,
    pub arch: TableArch,
    #[serde(default = "with_validation")]
    pub validation: Validation,
    #[serde(default)]
    pub dataset_dir: Option<PathBuf>,
    #[serde(default = "default_cap")]
    pub width_cap: Option<usize>,
    #[serde(default)]
    pub runs: Option<usize>,
    #[serde(default)]
    pub max_episodes: Option<usize>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub deterministic: bool,
    #[serde(default = "one")]
    pub jobs: usize,
}

fn with_validation() -> Validation {
    Validation::WithValidation
}

/// Parses a JSON file into `T`, mapping every failure to `BadConfig`.
pub fn load_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::BadConfig(format!("cannot read {}: {e}", path.display())))?;
    parse_json(&text).map_err(|e| Error::BadConfig(format!("{}: {e}", path.display())))
}

pub fn parse_json<T: DeserializeOwned>(text: &str) -> Result<T> {
    serde_json::from_str(text).map_err(|e| Error::BadConfig(e.to_string()))
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let cfg: Self = load_json(path)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.hyperparams.validate()?;
        if self.jobs == 0 {
            return Err(Error::BadConfig("jobs must be at least 1".into()));
        }
        if self.width_cap == Some(0) {
            return Err(Error::BadConfig("width_cap must be positive".into()));
        }
        if self.model.truncated_layers == Some(0) {
            return Err(Error::BadConfig("truncated_layers must be positive".into()));
        }
        if self.model.linear && self.model.arch != Architecture::Snowball {
            return Err(Error::BadConfig("linear applies to the snowball architecture only".into()));
        }
        // Shape-level checks with placeholder dimensions.
        self.model_spec(1, 2).validate()
    }

    /// Hyperparameters after the width cap.
    pub fn effective_hyperparams(&self) -> Hyperparams {
        let mut hp = self.hyperparams.clone();
        if let Some(cap) = self.width_cap {
            if hp.hidden > cap {
                log::info!("hidden width {} capped at {cap}", hp.hidden);
                hp.hidden = cap;
            }
        }
        hp
    }

    pub fn model_spec(&self, input_dim: usize, n_classes: usize) -> ModelSpec {
        let hp = self.effective_hyperparams();
        let m = &self.model;
        let mut spec = hp.model_spec(m.arch, m.linear, input_dim, n_classes);
        if let (Architecture::TruncatedKrylov, Some(layers)) = (m.arch, m.truncated_layers) {
            spec.hidden = vec![hp.hidden; layers];
        }
        if let Some(a) = m.f_act {
            spec.f_act = a;
        }
        if let Some(a) = m.g_act {
            spec.g_act = a;
        }
        if let Some(p) = m.p {
            spec.p = p;
        }
        if let Some(c) = m.classifier {
            spec.classifier = c;
        }
        if let Some(d) = m.dropout_classifier {
            spec.dropout_classifier = d;
        }
        spec
    }
}

impl BenchConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let cfg: Self = load_json(path)?;
        if cfg.jobs == 0 || cfg.width_cap == Some(0) || cfg.runs == Some(0) {
            return Err(Error::BadConfig("jobs, width_cap and runs must be positive".into()));
        }
        if cfg.datasets.is_empty() || cfg.splits.is_empty() {
            return Err(Error::BadConfig("datasets and splits must be non-empty".into()));
        }
        Ok(cfg)
    }
}
