use serde::{Deserialize, Serialize};

use crate::dataset::GraphDataset;
use crate::error::Result;
use crate::graph::{connected_components, diffusion, DiffusionKind};
use crate::linalg::{spectral_density, spectrum, SpectrumMethod, DENSE_EIGEN_LIMIT};

pub const HISTOGRAM_BINS: usize = 100;
/// Eigenvalues within this distance of 1 count towards its multiplicity.
pub const UNIT_EIGENVALUE_TOL: f64 = 1e-8;

/// Iteration budgets for graphs above the dense limit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectrumOptions {
    pub extremal_k: usize,
    pub extremal_steps: usize,
    pub density_steps: usize,
    pub density_probes: usize,
    pub seed: u64,
}

impl Default for SpectrumOptions {
    fn default() -> Self {
        Self {
            extremal_k: 20,
            extremal_steps: 300,
            density_steps: 100,
            density_probes: 20,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumResult {
    pub dataset: String,
    pub n_nodes: usize,
    /// `"dense_full"` or `"lanczos"`.
    pub method: String,
    /// Every eigenvalue on the dense path, the extremal Ritz values
    /// otherwise; ascending.
    pub eigenvalues: Vec<f64>,
    pub min: f64,
    pub max: f64,
    /// Eigenvalues within [`UNIT_EIGENVALUE_TOL`] of 1 (dense path only).
    pub unit_multiplicity: Option<usize>,
    pub n_components: usize,
    /// Counts (dense) or estimated counts (Lanczos) per bin over `[-1, 1]`.
    pub histogram: Vec<f64>,
}

impl SpectrumResult {
    pub const CSV_HEADER: &'static str = "bin_lo,bin_hi,count";

    pub fn csv_rows(&self) -> Vec<String> {
        let width = 2.0 / self.histogram.len() as f64;
        self.histogram
            .iter()
            .enumerate()
            .map(|(b, c)| {
                let lo = -1.0 + b as f64 * width;
                format!("{:.4},{:.4},{}", lo, lo + width, fmt_count(*c))
            })
            .collect()
    }
}

fn fmt_count(c: f64) -> String {
    if c.fract() == 0.0 {
        format!("{c:.0}")
    } else {
        format!("{c:.6}")
    }
}

/// Weighted histogram with [`HISTOGRAM_BINS`] equal bins over `[-1, 1]`.
/// Values outside the interval are clamped into the end bins.
pub fn histogram(values: &[f64], weights: Option<&[f64]>) -> Vec<f64> {
    let mut h = vec![0.0; HISTOGRAM_BINS];
    for (i, &v) in values.iter().enumerate() {
        let w = weights.map_or(1.0, |w| w[i]);
        let b = ((v + 1.0) / 2.0 * HISTOGRAM_BINS as f64).floor();
        let b = (b.max(0.0) as usize).min(HISTOGRAM_BINS - 1);
        h[b] += w;
    }
    h
}

/// Spectrum of the renormalized adjacency of `dataset`.
pub fn spectrum_experiment(dataset: &GraphDataset, opts: SpectrumOptions) -> Result<SpectrumResult> {
    let l = diffusion(&dataset.graph, DiffusionKind::RenormalizedAdjacency).matrix;
    let (n_components, _) = connected_components(&dataset.graph);
    let n = l.rows();
    let (method, eigenvalues, unit_multiplicity, hist) = if n <= DENSE_EIGEN_LIMIT {
        let ev = spectrum(&l, SpectrumMethod::DenseFull)?;
        let mult = ev.iter().filter(|v| (*v - 1.0).abs() <= UNIT_EIGENVALUE_TOL).count();
        let h = histogram(&ev, None);
        ("dense_full", ev, Some(mult), h)
    } else {
        let ev = spectrum(
            &l,
            SpectrumMethod::Lanczos {
                k: opts.extremal_k,
                iters: opts.extremal_steps,
            },
        )?;
        let (nodes, weights) = spectral_density(&l, opts.density_steps, opts.density_probes, opts.seed)?;
        ("lanczos", ev, None, histogram(&nodes, Some(&weights)))
    };
    Ok(SpectrumResult {
        dataset: dataset.name.clone(),
        n_nodes: n,
        method: method.into(),
        min: eigenvalues.first().copied().unwrap_or(f64::NAN),
        max: eigenvalues.last().copied().unwrap_or(f64::NAN),
        eigenvalues,
        unit_multiplicity,
        n_components,
        histogram: hist,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::build_graph;
    use crate::linalg::DenseMatrix;

    fn triangle() -> GraphDataset {
        GraphDataset {
            name: "triangle".into(),
            graph: build_graph(&[(0, 1), (1, 2), (0, 2)], 3).unwrap(),
            features: DenseMatrix::identity(3),
            labels: vec![0, 1, 2],
            n_classes: 3,
            split: None,
            features_normalized: false,
        }
    }

    #[test]
    fn triangle_spectrum() {
        let r = spectrum_experiment(&triangle(), SpectrumOptions::default()).unwrap();
        assert_eq!(r.method, "dense_full");
        let expect = [0.0, 0.0, 1.0];
        for (a, b) in r.eigenvalues.iter().zip(expect) {
            assert!((a - b).abs() < 1e-12);
        }
        assert_eq!(r.unit_multiplicity, Some(1));
        assert_eq!(r.histogram.iter().sum::<f64>(), 3.0);
        // The zero eigenvalues may land on either side of the middle edge.
        assert_eq!(r.histogram[49] + r.histogram[50], 2.0);
        assert_eq!(r.histogram[99], 1.0);
    }

    #[test]
    fn histogram_edges() {
        let h = histogram(&[-1.0, 1.0, -1.5, 0.999], None);
        assert_eq!(h[0], 2.0);
        assert_eq!(h[99], 2.0);
    }

    #[test]
    fn csv_has_100_rows() {
        let r = spectrum_experiment(&triangle(), SpectrumOptions::default()).unwrap();
        let rows = r.csv_rows();
        assert_eq!(rows.len(), 100);
        assert_eq!(rows[0], "-1.0000,-0.9800,0");
    }
}
