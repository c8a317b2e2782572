//! Graph datasets and the on-disk container.
//!
//! A container is a directory holding:
//!
//! * `meta.json`: `name`, `n_nodes`, `n_features`, `n_classes`,
//!   `features_normalized`, and optionally `train_idx`, `val_idx`,
//!   `test_idx` for a stored public split. Unknown keys such as
//!   `provenance` are ignored.
//! * `edges.bin`: undirected edges as little-endian `u32` pairs.
//! * `features.bin`: `n_nodes × n_features` little-endian `f64`, row-major.
//! * `labels.bin`: one little-endian `u16` per node.

use std::fs;
use std::path::{Path, PathBuf};

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{build_graph, Graph, SplitMode, SplitSpec};
use crate::linalg::DenseMatrix;
use crate::rng::seeded;

/// Environment variable naming the default dataset root.
pub const DATA_ENV: &str = "KGCN_DATA";

#[derive(Debug, Clone)]
pub struct GraphDataset {
    pub name: String,
    pub graph: Graph,
    pub features: DenseMatrix,
    pub labels: Vec<usize>,
    pub n_classes: usize,
    /// Split stored with the data (the public split for citation sets).
    pub split: Option<SplitSpec>,
    pub features_normalized: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct Meta {
    name: String,
    n_nodes: usize,
    n_features: usize,
    n_classes: usize,
    #[serde(default)]
    features_normalized: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    train_idx: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    val_idx: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    test_idx: Option<Vec<usize>>,
}

impl GraphDataset {
    pub fn n_nodes(&self) -> usize {
        self.graph.n_nodes()
    }

    pub fn n_features(&self) -> usize {
        self.features.cols()
    }

    /// Checks label range and feature/graph dimensions.
    pub fn validate(&self) -> Result<()> {
        let n = self.n_nodes();
        if self.features.rows() != n || self.labels.len() != n {
            return Err(Error::Dataset(format!(
                "{}: {} nodes but {} feature rows and {} labels",
                self.name,
                n,
                self.features.rows(),
                self.labels.len()
            )));
        }
        if let Some((i, &c)) = self
            .labels
            .iter()
            .enumerate()
            .find(|(_, &c)| c >= self.n_classes)
        {
            return Err(Error::Dataset(format!(
                "{}: node {i} has label {c} but n_classes is {}",
                self.name, self.n_classes
            )));
        }
        if !self.features.is_finite() {
            return Err(Error::Dataset(format!("{}: non-finite features", self.name)));
        }
        if let Some(split) = &self.split {
            split.validate(n)?;
        }
        Ok(())
    }
}

/// Resolves `name` under `root`, falling back to `$KGCN_DATA/name`. A
/// `name` that is itself a container directory is returned unchanged.
pub fn locate_dataset(name: &str, root: Option<&Path>) -> Result<PathBuf> {
    let direct = Path::new(name);
    if direct.join("meta.json").is_file() {
        return Ok(direct.to_path_buf());
    }
    let env_root = std::env::var_os(DATA_ENV).map(PathBuf::from);
    let candidates: Vec<PathBuf> = root
        .map(Path::to_path_buf)
        .into_iter()
        .chain(env_root)
        .map(|r| r.join(name))
        .collect();
    candidates
        .iter()
        .find(|p| p.join("meta.json").is_file())
        .cloned()
        .ok_or_else(|| {
            let tried: Vec<String> = candidates.iter().map(|p| p.display().to_string()).collect();
            Error::MissingDataset(if tried.is_empty() {
                format!("'{name}' (no dataset directory given and {DATA_ENV} unset)")
            } else {
                format!("'{name}' not found in {}", tried.join(", "))
            })
        })
}

pub fn read_container(dir: &Path) -> Result<GraphDataset> {
    if !dir.join("meta.json").is_file() {
        return Err(Error::MissingDataset(format!("{} has no meta.json", dir.display())));
    }
    let meta: Meta = serde_json::from_slice(&fs::read(dir.join("meta.json"))?)?;
    let n = meta.n_nodes;
    let name = &meta.name;

    let edge_bytes = fs::read(dir.join("edges.bin"))?;
    if edge_bytes.len() % 8 != 0 {
        return Err(Error::Dataset(format!(
            "{name}: edges.bin has {} bytes, not a multiple of 8",
            edge_bytes.len()
        )));
    }
    let edges: Vec<(usize, usize)> = edge_bytes
        .chunks_exact(8)
        .map(|c| {
            let u = u32::from_le_bytes(c[..4].try_into().expect("4 bytes"));
            let v = u32::from_le_bytes(c[4..].try_into().expect("4 bytes"));
            (u as usize, v as usize)
        })
        .collect();
    let graph = build_graph(&edges, n)?;

    let feat_bytes = fs::read(dir.join("features.bin"))?;
    let expect = n * meta.n_features * 8;
    if feat_bytes.len() != expect {
        return Err(Error::Dataset(format!(
            "{name}: features.bin has {} bytes, expected {expect}",
            feat_bytes.len()
        )));
    }
    let data = feat_bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
        .collect();
    let features = DenseMatrix::from_vec(n, meta.n_features, data)
        .map_err(|e| Error::Dataset(format!("{name}: features.bin: {e}")))?;

    let label_bytes = fs::read(dir.join("labels.bin"))?;
    if label_bytes.len() != n * 2 {
        return Err(Error::Dataset(format!(
            "{name}: labels.bin has {} bytes, expected {}",
            label_bytes.len(),
            n * 2
        )));
    }
    let labels: Vec<usize> = label_bytes
        .chunks_exact(2)
        .map(|c| u16::from_le_bytes([c[0], c[1]]) as usize)
        .collect();

    let split = match (meta.train_idx, meta.val_idx, meta.test_idx) {
        (None, None, None) => None,
        (Some(train_idx), val, Some(test_idx)) => Some(SplitSpec {
            train_idx,
            val_idx: val.unwrap_or_default(),
            test_idx,
            mode: SplitMode::Public,
            seed: 0,
        }),
        _ => {
            return Err(Error::Dataset(format!(
                "{name}: meta.json needs both train_idx and test_idx when a split is stored"
            )))
        }
    };

    let ds = GraphDataset {
        name: meta.name,
        graph,
        features,
        labels,
        n_classes: meta.n_classes,
        split,
        features_normalized: meta.features_normalized,
    };
    ds.validate()?;
    Ok(ds)
}

pub fn write_container(ds: &GraphDataset, dir: &Path) -> Result<()> {
    ds.validate()?;
    if ds.n_nodes() > u32::MAX as usize {
        return Err(Error::Dataset(format!("{}: too many nodes for u32 edges", ds.name)));
    }
    if ds.n_classes > u16::MAX as usize + 1 {
        return Err(Error::Dataset(format!("{}: too many classes for u16 labels", ds.name)));
    }
    fs::create_dir_all(dir)?;
    let meta = Meta {
        name: ds.name.clone(),
        n_nodes: ds.n_nodes(),
        n_features: ds.n_features(),
        n_classes: ds.n_classes,
        features_normalized: ds.features_normalized,
        train_idx: ds.split.as_ref().map(|s| s.train_idx.clone()),
        val_idx: ds.split.as_ref().map(|s| s.val_idx.clone()),
        test_idx: ds.split.as_ref().map(|s| s.test_idx.clone()),
    };
    let mut json = serde_json::to_vec_pretty(&meta)?;
    json.push(b'\n');
    fs::write(dir.join("meta.json"), json)?;

    let mut edges = Vec::with_capacity(ds.graph.n_edges() * 8);
    for &(u, v) in ds.graph.edges() {
        edges.extend_from_slice(&(u as u32).to_le_bytes());
        edges.extend_from_slice(&(v as u32).to_le_bytes());
    }
    fs::write(dir.join("edges.bin"), edges)?;

    let mut feats = Vec::with_capacity(ds.features.as_slice().len() * 8);
    for v in ds.features.as_slice() {
        feats.extend_from_slice(&v.to_le_bytes());
    }
    fs::write(dir.join("features.bin"), feats)?;

    let mut labels = Vec::with_capacity(ds.labels.len() * 2);
    for &c in &ds.labels {
        labels.extend_from_slice(&(c as u16).to_le_bytes());
    }
    fs::write(dir.join("labels.bin"), labels)?;
    Ok(())
}

/// Parameters of [`planted_partition`].
#[derive(Debug, Clone, Copy)]
pub struct PlantedPartition {
    pub nodes_per_class: usize,
    pub n_classes: usize,
    pub n_features: usize,
    /// Edge probability inside a class.
    pub p_in: f64,
    /// Edge probability across classes.
    pub p_out: f64,
    /// Probability that a feature owned by the node's class is on.
    pub feature_on: f64,
    /// Probability that any other feature is on.
    pub feature_noise: f64,
}

/// Synthetic citation-like data: a stochastic block model with sparse
/// binary features, each class owning a slice of the feature columns.
/// Features are row-normalized and a public split is stored.
pub fn planted_partition(name: &str, cfg: PlantedPartition, seed: u64) -> Result<GraphDataset> {
    let mut rng = seeded(seed);
    let n = cfg.nodes_per_class * cfg.n_classes;
    let labels: Vec<usize> = (0..n).map(|i| i / cfg.nodes_per_class).collect();
    let mut edges = Vec::new();
    for u in 0..n {
        for v in u + 1..n {
            let p = if labels[u] == labels[v] { cfg.p_in } else { cfg.p_out };
            if rng.random_bool(p) {
                edges.push((u, v));
            }
        }
    }
    let graph = build_graph(&edges, n)?;
    let owned = cfg.n_features / cfg.n_classes.max(1);
    let mut features = DenseMatrix::from_fn(n, cfg.n_features, |i, j| {
        let own = owned > 0 && j / owned == labels[i];
        let p = if own { cfg.feature_on } else { cfg.feature_noise };
        if rng.random_bool(p) {
            1.0
        } else {
            0.0
        }
    });
    features.row_normalize();
    let split = crate::graph::make_split(&labels, SplitMode::Public, seed)?;
    let ds = GraphDataset {
        name: name.to_string(),
        graph,
        features,
        labels,
        n_classes: cfg.n_classes,
        split: Some(split),
        features_normalized: true,
    };
    ds.validate()?;
    Ok(ds)
}

/// Small citation-like container shipped with the repository: 7 classes of
/// 40 nodes and 70 sparse binary features.
pub fn toy_citation() -> GraphDataset {
    planted_partition(
        "toy",
        PlantedPartition {
            nodes_per_class: 40,
            n_classes: 7,
            n_features: 70,
            p_in: 0.06,
            p_out: 0.003,
            feature_on: 0.25,
            feature_noise: 0.03,
        },
        2024,
    )
    .expect("fixed parameters are valid")
}

/// The triangle `K_3` with one-hot features and no stored split.
pub fn triangle() -> GraphDataset {
    GraphDataset {
        name: "triangle".into(),
        graph: build_graph(&[(0, 1), (1, 2), (0, 2)], 3).expect("valid edges"),
        features: DenseMatrix::identity(3),
        labels: vec![0, 1, 2],
        n_classes: 3,
        split: None,
        features_normalized: true,
    }
}
