//! Published hyperparameters and accuracies, keyed by (table, architecture,
//! dataset, split).

use serde::{Deserialize, Serialize};

use crate::graph::SplitMode;
use crate::nn::Architecture;
use crate::training::{Hyperparams, Optimizer};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Validation {
    WithValidation,
    WithoutValidation,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TableArch {
    LinearSnowball,
    Snowball,
    TruncatedKrylov,
}

impl TableArch {
    pub fn architecture(self) -> Architecture {
        match self {
            TableArch::LinearSnowball | TableArch::Snowball => Architecture::Snowball,
            TableArch::TruncatedKrylov => Architecture::TruncatedKrylov,
        }
    }

    pub fn is_linear(self) -> bool {
        self == TableArch::LinearSnowball
    }

    pub fn name(self) -> &'static str {
        match self {
            TableArch::LinearSnowball => "linear_snowball",
            TableArch::Snowball => "snowball",
            TableArch::TruncatedKrylov => "truncated_krylov",
        }
    }
}

impl std::str::FromStr for TableArch {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "linear_snowball" => Ok(TableArch::LinearSnowball),
            "snowball" => Ok(TableArch::Snowball),
            "truncated_krylov" | "truncated" => Ok(TableArch::TruncatedKrylov),
            other => Err(format!("unknown table architecture '{other}'")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HpRow {
    pub validation: Validation,
    pub arch: TableArch,
    pub dataset: &'static str,
    /// `"public"` or a percentage such as `"0.5%"`.
    pub split: &'static str,
    /// Labeled fraction of the nodes.
    pub fraction: f64,
    /// Published accuracy in percent.
    pub published_accuracy: f64,
    pub sota_accuracy: f64,
    pub lr: f64,
    pub weight_decay: f64,
    pub hidden: usize,
    pub layers_or_blocks: usize,
    pub dropout: f64,
    pub optimizer: Optimizer,
}

impl HpRow {
    /// The split these numbers were obtained on. Public rows use the
    /// stored split; the rest are resampled.
    pub fn split_mode(&self) -> Option<SplitMode> {
        match (self.split, self.validation) {
            ("public", _) => None,
            (_, Validation::WithValidation) => Some(SplitMode::Percent {
                fraction: self.fraction,
            }),
            (_, Validation::WithoutValidation) => Some(SplitMode::PercentNoValidation {
                fraction: self.fraction,
            }),
        }
    }

    /// Learning rates outside the published search interval are
    /// transcription errors in the source table.
    pub fn is_plausible(&self) -> bool {
        (1e-6..=5e-3).contains(&self.lr)
    }

    /// Hyperparameters with the hidden width capped at `width_cap`.
    pub fn hyperparams(&self, width_cap: Option<usize>) -> Hyperparams {
        let hidden = width_cap.map_or(self.hidden, |c| self.hidden.min(c));
        let mut hp = Hyperparams::new(
            self.lr,
            self.weight_decay,
            hidden,
            self.layers_or_blocks,
            self.dropout,
            self.optimizer,
        );
        hp.split = self.split_mode();
        hp
    }
}

/// Finds a row. `split` is `"public"` or a percentage like `"0.5%"`.
pub fn lookup(validation: Validation, arch: TableArch, dataset: &str, split: &str) -> Option<&'static HpRow> {
    let dataset = dataset.to_ascii_lowercase();
    let split = split.trim().to_ascii_lowercase();
    HP_TABLE
        .iter()
        .find(|r| r.validation == validation && r.arch == arch && r.dataset == dataset && r.split == split)
}

#[allow(clippy::too_many_arguments)]
const fn row(
    validation: Validation,
    arch: TableArch,
    dataset: &'static str,
    split: &'static str,
    fraction: f64,
    published_accuracy: f64,
    sota_accuracy: f64,
    lr: f64,
    weight_decay: f64,
    hidden: usize,
    layers_or_blocks: usize,
    dropout: f64,
    optimizer: Optimizer,
) -> HpRow {
    HpRow {
        validation,
        arch,
        dataset,
        split,
        fraction,
        published_accuracy,
        sota_accuracy,
        lr,
        weight_decay,
        hidden,
        layers_or_blocks,
        dropout,
        optimizer,
    }
}

use Optimizer::{Adam, Rmsprop};
use TableArch::{LinearSnowball, Snowball, TruncatedKrylov};
use Validation::{WithValidation, WithoutValidation};

pub static HP_TABLE: &[HpRow] = &[
    row(WithValidation, LinearSnowball, "cora", "0.5%", 0.005, 69.99, 60.8, 1.0689e-03, 1.4759e-02, 128, 6, 0.66987, Rmsprop),
    row(WithValidation, LinearSnowball, "cora", "1%", 0.01, 73.10, 67.5, 1.4795e-03, 2.3764e-02, 128, 9, 0.64394, Rmsprop),
    row(WithValidation, LinearSnowball, "cora", "3%", 0.03, 80.96, 77.7, 2.6847e-03, 5.1442e-03, 64, 9, 0.23648, Rmsprop),
    row(WithValidation, LinearSnowball, "cora", "public", 0.052, 83.19, 83.0, 1.6577e-04, 1.8606e-02, 1024, 3, 0.65277, Rmsprop),
    row(WithValidation, LinearSnowball, "citeseer", "0.5%", 0.005, 59.41, 53.8, 4.9284e-04, 6.9420e-03, 512, 11, 0.90071, Rmsprop),
    row(WithValidation, LinearSnowball, "citeseer", "1%", 0.01, 65.85, 63.3, 3.2628e-03, 1.6374e-02, 512, 3, 0.97331, Rmsprop),
    row(WithValidation, LinearSnowball, "citeseer", "public", 0.036, 73.54, 72.5, 2.8218e-03, 1.9812e-02, 5000, 1, 0.98327, Adam),
    row(WithValidation, LinearSnowball, "pubmed", "0.03%", 0.0003, 68.12, 61.0, 2.1124e-03, 4.4161e-02, 128, 7, 0.78683, Rmsprop),
    row(WithValidation, LinearSnowball, "pubmed", "0.05%", 0.0005, 70.04, 68.8, 4.9982e-03, 2.6460e-02, 128, 4, 0.86788, Rmsprop),
    row(WithValidation, LinearSnowball, "pubmed", "0.1%", 0.001, 73.83, 73.4, 1.2462e-03, 4.9303e-02, 128, 6, 0.3299, Rmsprop),
    row(WithValidation, LinearSnowball, "pubmed", "public", 0.003, 79.23, 79.0, 2.4044e-03, 2.3157e-02, 4000, 1, 0.98842, Adam),
    row(WithValidation, Snowball, "cora", "0.5%", 0.005, 72.96, 60.8, 2.3228e-04, 2.1310e-02, 950, 7, 0.88945, Rmsprop),
    row(WithValidation, Snowball, "cora", "1%", 0.01, 76.76, 67.5, 1.5483e-04, 1.3963e-02, 250, 15, 0.55385, Rmsprop),
    row(WithValidation, Snowball, "cora", "3%", 0.03, 80.72, 77.7, 1.6772e-03, 1.0725e-02, 64, 14, 0.80611, Rmsprop),
    row(WithValidation, Snowball, "cora", "public", 0.052, 83.60, 83.0, 1.2994e-05, 9.4469e-03, 5000, 3, 0.025052, Rmsprop),
    row(WithValidation, Snowball, "citeseer", "0.5%", 0.005, 62.05, 53.8, 2.0055e-03, 3.1340e-02, 512, 5, 0.88866, Rmsprop),
    row(WithValidation, Snowball, "citeseer", "1%", 0.01, 64.23, 63.3, 1.8759e-03, 9.3636e-03, 128, 7, 0.77334, Rmsprop),
    row(WithValidation, Snowball, "citeseer", "public", 0.036, 72.61, 72.5, 2.5527e-03, 6.2812e-03, 256, 1, 0.56755, Rmsprop),
    row(WithValidation, Snowball, "pubmed", "0.03%", 0.0003, 70.78, 61.0, 1.1029e-03, 1.8661e-02, 100, 15, 0.83381, Rmsprop),
    row(WithValidation, Snowball, "pubmed", "0.05%", 0.0005, 73.23, 68.8, 3.7159e-03, 2.2088e-02, 400, 9, 0.9158, Rmsprop),
    row(WithValidation, Snowball, "pubmed", "0.1%", 0.001, 76.52, 73.4, 4.9106e-03, 3.0777e-02, 100, 15, 0.79133, Rmsprop),
    row(WithValidation, Snowball, "pubmed", "public", 0.003, 79.54, 79.0, 4.9867e-03, 3.5816e-03, 3550, 1, 0.98968, Adam),
    row(WithValidation, TruncatedKrylov, "cora", "0.5%", 0.005, 73.89, 60.8, 1.6552e-04, 4.4330e-02, 4950, 27, 0.97726, Adam),
    row(WithValidation, TruncatedKrylov, "cora", "1%", 0.01, 77.38, 67.5, 2.8845e-04, 4.8469e-02, 4950, 30, 0.93928, Adam),
    row(WithValidation, TruncatedKrylov, "cora", "3%", 0.03, 82.23, 77.7, 8.6406e-04, 4.0126e-03, 2950, 16, 0.98759, Adam),
    row(WithValidation, TruncatedKrylov, "cora", "public", 0.052, 83.51, 83.0, 1.0922e-03, 3.5966e-02, 1950, 10, 0.98403, Adam),
    row(WithValidation, TruncatedKrylov, "citeseer", "0.5%", 0.005, 63.65, 53.8, 2.8208e-03, 4.3395e-02, 1150, 30, 0.92821, Adam),
    row(WithValidation, TruncatedKrylov, "citeseer", "1%", 0.01, 68.36, 63.3, 3.9898e-03, 3.8525e-03, 100, 27, 0.71951, Adam),
    row(WithValidation, TruncatedKrylov, "citeseer", "public", 0.036, 73.89, 72.5, 1.8292e-03, 4.2295e-02, 600, 11, 0.98865, Adam),
    row(WithValidation, TruncatedKrylov, "pubmed", "0.03%", 0.0003, 71.11, 61.0, 3.6759e-03, 1.2628e-02, 512, 8, 0.95902, Rmsprop),
    row(WithValidation, TruncatedKrylov, "pubmed", "0.05%", 0.0005, 72.86, 68.8, 4.0135e-03, 4.8831e-02, 4250, 5, 0.95911, Adam),
    row(WithValidation, TruncatedKrylov, "pubmed", "0.1%", 0.001, 75.68, 73.4, 4.7562e-03, 3.7134e-02, 950, 7, 0.96569, Adam),
    row(WithValidation, TruncatedKrylov, "pubmed", "public", 0.003, 79.88, 79.0, 3.9673e-04, 2.2931e-02, 1900, 4, 0.000127, Adam),
    row(WithoutValidation, LinearSnowball, "cora", "0.5%", 0.005, 69.53, 61.5, 4.4438e-05, 1.7409e-02, 550, 12, 0.007753, Adam),
    row(WithoutValidation, LinearSnowball, "cora", "1%", 0.01, 74.12, 69.9, 1.0826e-03, 3.3462e-03, 1250, 3, 0.50426, Adam),
    row(WithoutValidation, LinearSnowball, "cora", "2%", 0.02, 79.43, 75.9, 2.4594e-06, 9.6734e-03, 1650, 12, 0.34073, Adam),
    row(WithoutValidation, LinearSnowball, "cora", "3%", 0.03, 80.41, 78.5, 2.8597e-05, 3.4732e-02, 900, 15, 0.039034, Adam),
    row(WithoutValidation, LinearSnowball, "cora", "4%", 0.04, 81.3, 80.4, 3.6830e-05, 1.5664e-02, 3750, 4, 0.93797, Adam),
    row(WithoutValidation, LinearSnowball, "cora", "5%", 0.05, 82.19, 81.7, 5.8323e-06, 8.5940e-03, 2850, 5, 0.14701, Adam),
    row(WithoutValidation, LinearSnowball, "citeseer", "0.5%", 0.005, 56.76, 56.1, 4.5629e-03, 2.0106e-03, 300, 3, 0.038225, Adam),
    row(WithoutValidation, LinearSnowball, "citeseer", "1%", 0.01, 65.44, 62.1, 3.5530e-05, 4.9935e-02, 600, 6, 0.03556, Adam),
    row(WithoutValidation, LinearSnowball, "citeseer", "2%", 0.02, 68.78, 68.6, 6.1176e-06, 3.0101e-02, 1950, 3, 0.040484, Adam),
    row(WithoutValidation, LinearSnowball, "citeseer", "3%", 0.03, 71.0, 70.3, 2.1956e-05, 4.3569e-02, 3350, 3, 0.30207, Adam),
    row(WithoutValidation, LinearSnowball, "citeseer", "4%", 0.04, 72.23, 70.8, 9.1952e-05, 4.6407e-02, 3350, 2, 0.018231, Adam),
    row(WithoutValidation, LinearSnowball, "citeseer", "5%", 0.05, 72.21, 71.3, 3.7173e-03, 1.9605e-03, 2950, 1, 0.96958, Adam),
    row(WithoutValidation, LinearSnowball, "pubmed", "0.03%", 0.0003, 64.133, 62.2, 1.0724e-03, 8.1097e-03, 64, 4, 0.8022, Rmsprop),
    row(WithoutValidation, LinearSnowball, "pubmed", "0.05%", 0.0005, 69.48, 68.3, 1.5936e-03, 3.0236e-03, 6, 10, 0.73067, Rmsprop),
    row(WithoutValidation, LinearSnowball, "pubmed", "0.1%", 0.001, 72.93, 72.7, 4.9733e-03, 1.3744e-03, 128, 3, 0.91214, Rmsprop),
    row(WithoutValidation, LinearSnowball, "pubmed", "0.3%", 0.003, 79.33, 79.2, 1.7998e-03, 9.6753e-04, 512, 1, 0.97483, Rmsprop),
    row(WithoutValidation, Snowball, "cora", "0.5%", 0.005, 67.15, 61.5, 9.8649e-04, 1.0305e-02, 1600, 3, 0.92785, Adam),
    row(WithoutValidation, Snowball, "cora", "1%", 0.01, 73.47, 69.9, 1.4228e-04, 1.3472e-02, 100, 13, 0.68601, Adam),
    row(WithoutValidation, Snowball, "cora", "2%", 0.02, 78.54, 75.9, 5.7111e-06, 1.5544e-02, 600, 13, 0.022622, Adam),
    row(WithoutValidation, Snowball, "cora", "3%", 0.03, 79.97, 78.5, 4.0278e-05, 2.7287e-02, 4350, 5, 0.57173, Adam),
    row(WithoutValidation, Snowball, "cora", "4%", 0.04, 81.49, 80.4, 1.4152e-05, 2.3359e-02, 2500, 13, 0.018578, Adam),
    row(WithoutValidation, Snowball, "cora", "5%", 0.05, 81.82, 81.7, 1.2621e-03, 1.5323e-02, 3550, 2, 0.87352, Adam),
    row(WithoutValidation, Snowball, "citeseer", "0.5%", 0.005, 56.39, 56.1, 2.6983e-03, 2.5370e-02, 300, 6, 0.82964, Adam),
    row(WithoutValidation, Snowball, "citeseer", "1%", 0.01, 65.04, 62.1, 1.6982e-03, 1.5473e-02, 2150, 2, 0.98611, Adam),
    row(WithoutValidation, Snowball, "citeseer", "2%", 0.02, 69.48, 68.6, 9.7299e-05, 4.9675e-02, 2150, 3, 0.71216, Adam),
    row(WithoutValidation, Snowball, "citeseer", "3%", 0.03, 71.09, 70.3, 1.7839e-04, 3.0874e-02, 2150, 2, 0.16549, Adam),
    row(WithoutValidation, Snowball, "citeseer", "4%", 0.04, 72.32, 70.8, 5.6575e-05, 3.5949e-02, 4800, 2, 0.012576, Adam),
    row(WithoutValidation, Snowball, "citeseer", "5%", 0.05, 72.8, 71.3, 2.8643e-04, 1.6399e-02, 2000, 2, 0.37308, Adam),
    row(WithoutValidation, Snowball, "pubmed", "0.03%", 0.0003, 62.94, 62.2, 1.2700e-03, 1.4159e-03, 128, 4, 0.76848, Rmsprop),
    row(WithoutValidation, Snowball, "pubmed", "0.05%", 0.0005, 68.31, 68.3, 1.1224e-03, 9.9166e-05, 256, 3, 0.85496, Rmsprop),
    row(WithoutValidation, Snowball, "pubmed", "0.1%", 0.001, 73.29, 72.7, 6.0506e-04, 1.0303e-03, 256, 2, 0.97988, Rmsprop),
    row(WithoutValidation, Snowball, "pubmed", "0.3%", 0.003, 79.63, 79.2, 1.1416e-03, 6.1543e-04, 128, 1, 0.989, Rmsprop),
    row(WithoutValidation, TruncatedKrylov, "cora", "0.5%", 0.005, 72.96, 61.5, 3.3276e-03, 1.0496e-04, 128, 18, 0.76012, Rmsprop),
    row(WithoutValidation, TruncatedKrylov, "cora", "1%", 0.01, 75.52, 69.9, 7.4797e-04, 9.1736e-03, 2048, 20, 0.98941, Rmsprop),
    row(WithoutValidation, TruncatedKrylov, "cora", "2%", 0.02, 80.31, 75.9, 1.7894e-04, 1.1079e-02, 4096, 16, 0.97091, Rmsprop),
    row(WithoutValidation, TruncatedKrylov, "cora", "3%", 0.03, 81.54, 78.5, 4.3837e-04, 2.6958e-03, 512, 17, 0.96643, Rmsprop),
    row(WithoutValidation, TruncatedKrylov, "cora", "4%", 0.04, 82.47, 80.4, 3.6117e-03, 4.1040e-04, 64, 25, 0.021987, Rmsprop),
    row(WithoutValidation, TruncatedKrylov, "cora", "5%", 0.05, 83.36, 81.7, 1.0294e-03, 5.3882e-04, 256, 23, 0.028392, Rmsprop),
    row(WithoutValidation, TruncatedKrylov, "citeseer", "0.5%", 0.005, 59.6, 56.1, 1.9790e-03, 4.0283e-04, 16, 20, 0.007761, Rmsprop),
    row(WithoutValidation, TruncatedKrylov, "citeseer", "1%", 0.01, 65.95, 62.1, 7.8506e-04, 8.2432e-03, 64, 24, 0.28159, Rmsprop),
    row(WithoutValidation, TruncatedKrylov, "citeseer", "2%", 0.02, 70.23, 68.6, 5.4517e-04, 1.0818e-02, 256, 12, 0.27027, Rmsprop),
    row(WithoutValidation, TruncatedKrylov, "citeseer", "3%", 0.03, 71.81, 70.3, 1.4107e-04, 5.0062e-03, 1024, 9, 0.57823, Rmsprop),
    row(WithoutValidation, TruncatedKrylov, "citeseer", "4%", 0.04, 72.36, 70.8, 4.8864e-06, 1.8038e-02, 4096, 12, 0.11164, Rmsprop),
    row(WithoutValidation, TruncatedKrylov, "citeseer", "5%", 0.05, 72.24, 71.3, 2.1761e-03, 1.1753e-02, 5000, 8, 0.71473, Adam),
    row(WithoutValidation, TruncatedKrylov, "pubmed", "0.03%", 0.0003, 69.07, 62.2, 6.8475e-04, 2.8822e-02, 4096, 7, 0.97245, Rmsprop),
    row(WithoutValidation, TruncatedKrylov, "pubmed", "0.05%", 0.0005, 71.77, 68.3, 2.3342e+04, 2.2189e-03, 1024, 8, 0.93694, Rmsprop),
    row(WithoutValidation, TruncatedKrylov, "pubmed", "0.1%", 0.001, 76.07, 72.7, 4.2629e-04, 4.1339e-03, 2048, 8, 0.98914, Rmsprop),
    row(WithoutValidation, TruncatedKrylov, "pubmed", "0.3%", 0.003, 80.04, 79.2, 2.2602e-04, 3.3626e-02, 2000, 7, 0.070573, Adam),
];

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_sizes() {
        let with = HP_TABLE.iter().filter(|r| r.validation == WithValidation).count();
        let without = HP_TABLE.iter().filter(|r| r.validation == WithoutValidation).count();
        assert_eq!(with, 33);
        assert_eq!(without, 48);
    }

    #[test]
    fn acceptance_rows() {
        let r = lookup(WithValidation, LinearSnowball, "cora", "public").unwrap();
        assert_eq!((r.lr, r.weight_decay, r.hidden, r.layers_or_blocks), (1.6577e-4, 1.8606e-2, 1024, 3));
        assert_eq!(r.published_accuracy, 83.19);
        let r = lookup(WithValidation, TruncatedKrylov, "cora", "public").unwrap();
        assert_eq!((r.hidden, r.layers_or_blocks, r.optimizer), (1950, 10, Adam));
        assert_eq!(r.hyperparams(Some(1024)).hidden, 1024);
        let r = lookup(WithValidation, TruncatedKrylov, "CiteSeer", "public").unwrap();
        assert_eq!(r.published_accuracy, 73.89);
        let r = lookup(WithoutValidation, TruncatedKrylov, "cora", "0.5%").unwrap();
        assert_eq!((r.published_accuracy, r.hidden, r.layers_or_blocks), (72.96, 128, 18));
        assert_eq!(r.split_mode(), Some(SplitMode::PercentNoValidation { fraction: 0.005 }));
    }

    #[test]
    fn only_the_known_typo_is_implausible() {
        let bad: Vec<_> = HP_TABLE.iter().filter(|r| !r.is_plausible()).collect();
        assert_eq!(bad.len(), 1);
        assert_eq!((bad[0].dataset, bad[0].split), ("pubmed", "0.05%"));
    }

    #[test]
    fn keys_unique() {
        for (i, a) in HP_TABLE.iter().enumerate() {
            for b in &HP_TABLE[i + 1..] {
                assert!(
                    (a.validation, a.arch, a.dataset, a.split) != (b.validation, b.arch, b.dataset, b.split)
                );
            }
        }
    }
}
