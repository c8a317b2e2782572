use serde::{Deserialize, Serialize};

use crate::dataset::GraphDataset;
use crate::error::{Error, Result};
use crate::experiments::hp_table::{lookup, TableArch, Validation};
use crate::training::train_parallel;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchOptions {
    /// Hidden widths above this are clamped.
    pub width_cap: Option<usize>,
    /// Overrides the number of runs per cell.
    pub runs: Option<usize>,
    pub max_episodes: Option<usize>,
    pub seed: u64,
    pub jobs: usize,
    pub deterministic: bool,
}

impl Default for BenchOptions {
    fn default() -> Self {
        Self {
            width_cap: Some(1024),
            runs: None,
            max_episodes: None,
            seed: 0,
            jobs: 1,
            deterministic: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchCell {
    pub dataset: String,
    pub split: String,
    pub arch: String,
    pub validation: Validation,
    pub published_accuracy: Option<f64>,
    pub mean: Option<f64>,
    pub std: Option<f64>,
    /// `"ok"` or the reason the cell has no result.
    pub status: String,
}

impl BenchCell {
    pub const CSV_HEADER: &'static str = "dataset,arch,split,validation,published,mean,std,status";

    pub fn csv_row(&self) -> String {
        let opt = |v: Option<f64>, scale: f64| v.map_or(String::new(), |x| format!("{:.4}", x * scale));
        format!(
            "{},{},{},{},{},{},{},{}",
            self.dataset,
            self.arch,
            self.split,
            match self.validation {
                Validation::WithValidation => "with",
                Validation::WithoutValidation => "without",
            },
            opt(self.published_accuracy, 1.0),
            opt(self.mean, 100.0),
            opt(self.std, 100.0),
            self.status.replace(',', ";")
        )
    }
}

/// Trains every (dataset, split) cell with its published hyperparameters.
/// A cell that cannot run is recorded with its error rather than aborting
/// the grid.
pub fn benchmark_grid(
    datasets: &[String],
    splits: &[String],
    arch: TableArch,
    validation: Validation,
    load: &dyn Fn(&str) -> Result<GraphDataset>,
    opts: &BenchOptions,
) -> Result<Vec<BenchCell>> {
    let mut cells = Vec::new();
    for name in datasets {
        let data = load(name);
        for split in splits {
            let row = lookup(validation, arch, name, split);
            let mut cell = BenchCell {
                dataset: name.clone(),
                split: split.clone(),
                arch: arch.name().into(),
                validation,
                published_accuracy: row.map(|r| r.published_accuracy),
                mean: None,
                std: None,
                status: "ok".into(),
            };
            let outcome = (|| -> Result<(f64, f64)> {
                let row = row.ok_or_else(|| {
                    Error::BadConfig(format!("no published hyperparameters for {name} {split}"))
                })?;
                if !row.is_plausible() {
                    return Err(Error::BadConfig(format!("published lr {} is implausible", row.lr)));
                }
                let ds = data.as_ref().map_err(|e| match e {
                    Error::MissingDataset(m) => Error::MissingDataset(m.clone()),
                    other => Error::Dataset(other.to_string()),
                })?;
                let mut hp = row.hyperparams(opts.width_cap);
                hp.seed = opts.seed;
                if let Some(r) = opts.runs {
                    hp.runs = r;
                }
                if let Some(m) = opts.max_episodes {
                    hp.max_episodes = m;
                }
                let spec = hp.model_spec(arch.architecture(), arch.is_linear(), ds.n_features(), ds.n_classes);
                let report = train_parallel(ds, &spec, &hp, opts.jobs, opts.deterministic)?;
                Ok((report.mean, report.std))
            })();
            match outcome {
                Ok((m, s)) => {
                    cell.mean = Some(m);
                    cell.std = Some(s);
                }
                Err(e) => {
                    log::warn!("{name} {split}: {e}");
                    cell.status = format!("{}: {e}", e.kind());
                }
            }
            cells.push(cell);
        }
    }
    Ok(cells)
}
