//! Undirected graphs, diffusion operators, node splits and random graphs.

use std::collections::VecDeque;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::SparseMatrix;
use crate::rng;

/// Simple undirected graph with a 0/1 adjacency matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Graph {
    n_nodes: usize,
    /// Unique pairs with `u < v`, sorted.
    edges: Vec<(usize, usize)>,
    adjacency: SparseMatrix,
}

impl Graph {
    pub fn n_nodes(&self) -> usize {
        self.n_nodes
    }

    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn adjacency(&self) -> &SparseMatrix {
        &self.adjacency
    }

    pub fn degrees(&self) -> Vec<usize> {
        (0..self.n_nodes)
            .map(|i| self.adjacency.row_ptr()[i + 1] - self.adjacency.row_ptr()[i])
            .collect()
    }

    /// Relabels nodes: node `i` becomes `perm[i]`.
    pub fn permuted(&self, perm: &[usize]) -> Result<Graph> {
        let edges: Vec<(usize, usize)> = self
            .edges
            .iter()
            .map(|&(u, v)| (perm[u], perm[v]))
            .collect();
        build_graph(&edges, self.n_nodes)
    }
}

/// Builds a graph from an edge list. Edges are symmetrized and deduplicated;
/// self-loops are dropped.
pub fn build_graph(edge_list: &[(usize, usize)], n_nodes: usize) -> Result<Graph> {
    let mut edges = Vec::with_capacity(edge_list.len());
    for &(u, v) in edge_list {
        if u >= n_nodes || v >= n_nodes {
            return Err(Error::InvalidEdge { u, v, n_nodes });
        }
        if u != v {
            edges.push((u.min(v), u.max(v)));
        }
    }
    edges.sort_unstable();
    edges.dedup();
    let adjacency = SparseMatrix::from_triplets(
        n_nodes,
        n_nodes,
        edges
            .iter()
            .flat_map(|&(u, v)| [(u, v, 1.0), (v, u, 1.0)]),
    )?;
    Ok(Graph {
        n_nodes,
        edges,
        adjacency,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DiffusionKind {
    /// `D̃^{-1/2}(A + I)D̃^{-1/2}` with `D̃` the degree matrix of `A + I`.
    RenormalizedAdjacency,
    /// `D − A`.
    Laplacian,
    /// `I − D^{-1/2} A D^{-1/2}`; isolated nodes use `D^{-1/2} = 0`.
    NormalizedLaplacian,
    /// `A + I`.
    Affinity,
}

/// Symmetric operator that propagates signals over a graph.
#[derive(Debug, Clone, PartialEq)]
pub struct DiffusionOperator {
    pub matrix: SparseMatrix,
    pub kind: DiffusionKind,
}

impl DiffusionOperator {
    pub fn n(&self) -> usize {
        self.matrix.rows()
    }
}

pub fn diffusion(graph: &Graph, kind: DiffusionKind) -> DiffusionOperator {
    let n = graph.n_nodes();
    let adj = graph.adjacency();
    let deg: Vec<f64> = graph.degrees().into_iter().map(|d| d as f64).collect();
    let mut trip: Vec<(usize, usize, f64)> = Vec::with_capacity(adj.nnz() + n);
    match kind {
        DiffusionKind::RenormalizedAdjacency => {
            // 1/sqrt(d_i d_j) rather than a product of two rounded inverse
            // roots, so entries such as 1/2 come out exact.
            let tilde: Vec<f64> = deg.iter().map(|d| d + 1.0).collect();
            for i in 0..n {
                trip.push((i, i, 1.0 / tilde[i]));
                for (j, _) in adj.row(i) {
                    trip.push((i, j, 1.0 / (tilde[i] * tilde[j]).sqrt()));
                }
            }
        }
        DiffusionKind::Laplacian => {
            for i in 0..n {
                if deg[i] > 0.0 {
                    trip.push((i, i, deg[i]));
                }
                for (j, _) in adj.row(i) {
                    trip.push((i, j, -1.0));
                }
            }
        }
        DiffusionKind::NormalizedLaplacian => {
            let inv_sqrt: Vec<f64> = deg
                .iter()
                .map(|&d| if d > 0.0 { 1.0 / d.sqrt() } else { 0.0 })
                .collect();
            for i in 0..n {
                trip.push((i, i, 1.0));
                for (j, _) in adj.row(i) {
                    trip.push((i, j, -(inv_sqrt[i] * inv_sqrt[j])));
                }
            }
        }
        DiffusionKind::Affinity => {
            for i in 0..n {
                trip.push((i, i, 1.0));
                for (j, _) in adj.row(i) {
                    trip.push((i, j, 1.0));
                }
            }
        }
    }
    let matrix = SparseMatrix::from_triplets(n, n, trip)
        .expect("operator entries are in range by construction");
    DiffusionOperator { matrix, kind }
}

/// Component count and a component label per node. Labels are numbered in
/// order of each component's smallest node.
pub fn connected_components(graph: &Graph) -> (usize, Vec<usize>) {
    let n = graph.n_nodes();
    let mut labels = vec![usize::MAX; n];
    let mut k = 0;
    let mut queue = VecDeque::new();
    for s in 0..n {
        if labels[s] != usize::MAX {
            continue;
        }
        labels[s] = k;
        queue.push_back(s);
        while let Some(u) = queue.pop_front() {
            for (v, _) in graph.adjacency().row(u) {
                if labels[v] == usize::MAX {
                    labels[v] = k;
                    queue.push_back(v);
                }
            }
        }
        k += 1;
    }
    (k, labels)
}

/// `G(n, p)`: every unordered pair is an edge independently with probability `p`.
pub fn erdos_renyi(n: usize, p: f64, seed: u64) -> Result<Graph> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::BadConfig(format!("edge probability {p} outside [0, 1]")));
    }
    let mut rng = rng::seeded(seed);
    let mut edges = Vec::new();
    for u in 0..n {
        for v in u + 1..n {
            if rng.random_bool(p) {
                edges.push((u, v));
            }
        }
    }
    build_graph(&edges, n)
}

/// Labeled nodes per class in the public split.
pub const PUBLIC_PER_CLASS: usize = 20;
/// Validation set size in the public and percentage splits.
pub const VALIDATION_SIZE: usize = 500;
/// Test set size in the public split.
pub const PUBLIC_TEST_SIZE: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case", deny_unknown_fields)]
pub enum SplitMode {
    /// 20 labeled nodes per class, 500 validation, 1000 test.
    Public,
    /// `⌊fraction · N⌋` random training nodes, 500 validation, rest test.
    Percent { fraction: f64 },
    /// As `Percent` with an empty validation set.
    PercentNoValidation { fraction: f64 },
}

impl SplitMode {
    pub fn has_validation(&self) -> bool {
        !matches!(self, SplitMode::PercentNoValidation { .. })
    }

    pub fn label(&self) -> String {
        match self {
            SplitMode::Public => "public".into(),
            SplitMode::Percent { fraction } => format!("{}%", fraction * 100.0),
            SplitMode::PercentNoValidation { fraction } => {
                format!("{}%-noval", fraction * 100.0)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub train_idx: Vec<usize>,
    pub val_idx: Vec<usize>,
    pub test_idx: Vec<usize>,
    pub mode: SplitMode,
    pub seed: u64,
}

impl SplitSpec {
    /// Checks disjointness and range.
    pub fn validate(&self, n_nodes: usize) -> Result<()> {
        let mut seen = vec![false; n_nodes];
        for &i in self
            .train_idx
            .iter()
            .chain(&self.val_idx)
            .chain(&self.test_idx)
        {
            if i >= n_nodes {
                return Err(Error::Dataset(format!("split index {i} out of range {n_nodes}")));
            }
            if seen[i] {
                return Err(Error::Dataset(format!("node {i} appears in two split sets")));
            }
            seen[i] = true;
        }
        Ok(())
    }
}

/// Samples a train/validation/test split. Sets are sorted ascending.
///
/// On graphs smaller than the citation benchmarks the validation set takes
/// at most a third of the nodes left after training, so the test set is
/// never empty.
pub fn make_split(labels: &[usize], mode: SplitMode, seed: u64) -> Result<SplitSpec> {
    let n = labels.len();
    let mut rng = rng::seeded(seed);
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng);

    let (mut train, rest): (Vec<usize>, Vec<usize>) = match mode {
        SplitMode::Public => {
            let n_classes = labels.iter().max().map_or(0, |m| m + 1);
            let mut taken = vec![0usize; n_classes];
            let mut train = Vec::new();
            let mut rest = Vec::new();
            for &i in &order {
                let c = labels[i];
                if taken[c] < PUBLIC_PER_CLASS {
                    taken[c] += 1;
                    train.push(i);
                } else {
                    rest.push(i);
                }
            }
            if let Some((class, &found)) = taken
                .iter()
                .enumerate()
                .find(|(_, &t)| t < PUBLIC_PER_CLASS)
            {
                return Err(Error::InsufficientLabels {
                    class,
                    found,
                    needed: PUBLIC_PER_CLASS,
                });
            }
            (train, rest)
        }
        SplitMode::Percent { fraction } | SplitMode::PercentNoValidation { fraction } => {
            if !(0.0..=1.0).contains(&fraction) {
                return Err(Error::BadConfig(format!("split fraction {fraction} outside [0, 1]")));
            }
            let k = ((fraction * n as f64).floor() as usize).min(n);
            (order[..k].to_vec(), order[k..].to_vec())
        }
    };

    let n_val = if mode.has_validation() {
        VALIDATION_SIZE.min(rest.len() / 3)
    } else {
        0
    };
    let mut val = rest[..n_val].to_vec();
    let mut test = match mode {
        SplitMode::Public => rest[n_val..(n_val + PUBLIC_TEST_SIZE).min(rest.len())].to_vec(),
        _ => rest[n_val..].to_vec(),
    };
    train.sort_unstable();
    val.sort_unstable();
    test.sort_unstable();
    Ok(SplitSpec {
        train_idx: train,
        val_idx: val,
        test_idx: test,
        mode,
        seed,
    })
}
