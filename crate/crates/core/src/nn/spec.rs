use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Activation;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Architecture {
    VanillaGcn,
    Snowball,
    TruncatedKrylov,
}

impl Architecture {
    pub fn name(self) -> &'static str {
        match self {
            Architecture::VanillaGcn => "vanilla_gcn",
            Architecture::Snowball => "snowball",
            Architecture::TruncatedKrylov => "truncated_krylov",
        }
    }
}

impl std::str::FromStr for Architecture {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "vanilla_gcn" | "vanilla" | "gcn" => Ok(Architecture::VanillaGcn),
            "snowball" => Ok(Architecture::Snowball),
            "truncated_krylov" | "truncated" => Ok(Architecture::TruncatedKrylov),
            other => Err(format!("unknown architecture '{other}'")),
        }
    }
}

impl std::fmt::Display for Architecture {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// How the classifier input `C` is formed from the last hidden blocks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Classifier {
    /// `C = g(blocks)`, no weight of its own.
    Identity,
    /// `C = g(blocks · W_n)` with `W_n` of width `width`.
    Dense { width: usize },
}

/// Architecture and shape description shared by forward, backward and
/// initialization.
///
/// `hidden[l]` is `F_{l+1}`; its length is the depth `n`. For the vanilla
/// GCN, `f_act` is the activation and `g_act`, `p` and `classifier` are
/// ignored.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    pub arch: Architecture,
    pub input_dim: usize,
    pub hidden: Vec<usize>,
    #[serde(default = "one")]
    pub n_blocks: usize,
    pub f_act: Activation,
    pub g_act: Activation,
    pub p: u8,
    pub classifier: Classifier,
    pub n_classes: usize,
    #[serde(default)]
    pub dropout: f64,
    #[serde(default = "yes")]
    pub dropout_classifier: bool,
}

fn one() -> usize {
    1
}

fn yes() -> bool {
    true
}

impl ModelSpec {
    pub fn vanilla(input_dim: usize, width: usize, depth: usize, n_classes: usize, act: Activation) -> Self {
        Self {
            arch: Architecture::VanillaGcn,
            input_dim,
            hidden: vec![width; depth],
            n_blocks: 1,
            f_act: act,
            g_act: Activation::Identity,
            p: 1,
            classifier: Classifier::Identity,
            n_classes,
            dropout: 0.0,
            dropout_classifier: false,
        }
    }

    /// `f = g = identity`, `p = 1`, identity classifier.
    pub fn linear_snowball(input_dim: usize, width: usize, depth: usize, n_classes: usize) -> Self {
        Self {
            arch: Architecture::Snowball,
            f_act: Activation::Identity,
            ..Self::vanilla(input_dim, width, depth, n_classes, Activation::Identity)
        }
    }

    /// `f = tanh`, `g = identity`, `p = 1`, identity classifier.
    pub fn snowball(input_dim: usize, width: usize, depth: usize, n_classes: usize) -> Self {
        Self {
            f_act: Activation::Tanh,
            ..Self::linear_snowball(input_dim, width, depth, n_classes)
        }
    }

    /// `f = g = tanh`, `p = 0`, identity classifier.
    pub fn truncated_krylov(
        input_dim: usize,
        width: usize,
        depth: usize,
        n_blocks: usize,
        n_classes: usize,
    ) -> Self {
        Self {
            arch: Architecture::TruncatedKrylov,
            input_dim,
            hidden: vec![width; depth],
            n_blocks,
            f_act: Activation::Tanh,
            g_act: Activation::Tanh,
            p: 0,
            classifier: Classifier::Identity,
            n_classes,
            dropout: 0.0,
            dropout_classifier: true,
        }
    }

    pub fn depth(&self) -> usize {
        self.hidden.len()
    }

    /// `F_l` for `l = 0..=n`.
    pub fn widths(&self) -> Vec<usize> {
        let mut w = Vec::with_capacity(self.hidden.len() + 1);
        w.push(self.input_dim);
        w.extend_from_slice(&self.hidden);
        w
    }

    /// Shape of hidden weight `W_l`.
    pub fn layer_shape(&self, l: usize) -> (usize, usize) {
        let w = self.widths();
        let rows = match self.arch {
            Architecture::VanillaGcn => w[l],
            Architecture::Snowball => w[..=l].iter().sum(),
            Architecture::TruncatedKrylov => self.n_blocks * w[l],
        };
        (rows, w[l + 1])
    }

    /// Widths of the blocks that feed the classifier.
    pub fn classifier_blocks(&self) -> Vec<usize> {
        let w = self.widths();
        match self.arch {
            Architecture::Snowball => w,
            _ => vec![w[self.depth()]],
        }
    }

    /// Shape of `W_n`, present only for a dense classifier.
    pub fn classifier_shape(&self) -> Option<(usize, usize)> {
        match (self.arch, self.classifier) {
            (Architecture::VanillaGcn, _) | (_, Classifier::Identity) => None,
            (_, Classifier::Dense { width }) => Some((self.classifier_blocks().iter().sum(), width)),
        }
    }

    /// `F_C`.
    pub fn classifier_width(&self) -> usize {
        match self.classifier_shape() {
            Some((_, w)) => w,
            None => self.classifier_blocks().iter().sum(),
        }
    }

    /// Shape of `W_C` (for the vanilla GCN, the final `W_n`).
    pub fn output_shape(&self) -> (usize, usize) {
        (self.classifier_width(), self.n_classes)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::BadConfig(m));
        if self.input_dim == 0 {
            return bad("input_dim must be positive".into());
        }
        if self.hidden.contains(&0) {
            return bad("hidden widths must be positive".into());
        }
        if self.n_classes == 0 {
            return bad("n_classes must be positive".into());
        }
        if self.p > 1 {
            return bad(format!("p must be 0 or 1, got {}", self.p));
        }
        if self.arch == Architecture::TruncatedKrylov && self.n_blocks == 0 {
            return bad("truncated_krylov needs n_blocks >= 1".into());
        }
        if let Classifier::Dense { width: 0 } = self.classifier {
            return bad("classifier width must be positive".into());
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return bad(format!("dropout must lie in [0, 1), got {}", self.dropout));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn snowball_shapes_grow() {
        let s = ModelSpec::linear_snowball(5, 7, 3, 4);
        assert_eq!(s.layer_shape(0), (5, 7));
        assert_eq!(s.layer_shape(2), (19, 7));
        assert_eq!(s.classifier_width(), 26);
        assert_eq!(s.output_shape(), (26, 4));
    }

    #[test]
    fn truncated_shapes() {
        let mut s = ModelSpec::truncated_krylov(5, 7, 2, 3, 4);
        assert_eq!(s.layer_shape(0), (15, 7));
        assert_eq!(s.layer_shape(1), (21, 7));
        assert_eq!(s.output_shape(), (7, 4));
        s.classifier = Classifier::Dense { width: 6 };
        assert_eq!(s.classifier_shape(), Some((7, 6)));
        assert_eq!(s.output_shape(), (6, 4));
    }

    #[test]
    fn validation_rejects_bad_values() {
        let mut s = ModelSpec::snowball(3, 4, 2, 2);
        assert!(s.validate().is_ok());
        s.p = 2;
        assert!(s.validate().is_err());
        let mut t = ModelSpec::truncated_krylov(3, 4, 2, 0, 2);
        assert!(t.validate().is_err());
        t.n_blocks = 2;
        t.dropout = 1.0;
        assert!(t.validate().is_err());
    }

    #[test]
    fn parses_architecture_names() {
        assert_eq!("truncated-krylov".parse::<Architecture>().unwrap(), Architecture::TruncatedKrylov);
        assert!("gat".parse::<Architecture>().is_err());
    }
}
