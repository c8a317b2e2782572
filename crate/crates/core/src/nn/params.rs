use std::io::{Read, Write};

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{shape_err, Error, Result};
use crate::linalg::DenseMatrix;
use crate::nn::ModelSpec;
use crate::rng::{normal_matrix, seeded};

/// Trainable weights. Gradients use the same layout.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    /// `W_0 … W_{n−1}`.
    pub layers: Vec<DenseMatrix>,
    /// `W_n` of a dense classifier.
    pub classifier: Option<DenseMatrix>,
    /// `W_C`, or the final `W_n` of a vanilla GCN.
    pub output: DenseMatrix,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "scheme", rename_all = "snake_case")]
pub enum InitScheme {
    GlorotUniform,
    Normal { sigma: f64 },
}

impl ModelParams {
    pub fn zeros(spec: &ModelSpec) -> Self {
        let z = |(r, c): (usize, usize)| DenseMatrix::zeros(r, c);
        Self {
            layers: (0..spec.depth()).map(|l| z(spec.layer_shape(l))).collect(),
            classifier: spec.classifier_shape().map(z),
            output: z(spec.output_shape()),
        }
    }

    pub fn zeros_like(&self) -> Self {
        let z = |m: &DenseMatrix| DenseMatrix::zeros(m.rows(), m.cols());
        Self {
            layers: self.layers.iter().map(z).collect(),
            classifier: self.classifier.as_ref().map(z),
            output: z(&self.output),
        }
    }

    pub fn matrices(&self) -> Vec<&DenseMatrix> {
        let mut v: Vec<&DenseMatrix> = self.layers.iter().collect();
        v.extend(self.classifier.iter());
        v.push(&self.output);
        v
    }

    pub fn matrices_mut(&mut self) -> Vec<&mut DenseMatrix> {
        let mut v: Vec<&mut DenseMatrix> = self.layers.iter_mut().collect();
        v.extend(self.classifier.iter_mut());
        v.push(&mut self.output);
        v
    }

    pub fn n_params(&self) -> usize {
        self.matrices().iter().map(|m| m.as_slice().len()).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.matrices().iter().all(|m| m.is_finite())
    }

    /// Checks every shape against `spec`.
    pub fn check(&self, spec: &ModelSpec) -> Result<()> {
        if self.layers.len() != spec.depth() {
            return shape_err(format!(
                "expected {} hidden weights, found {}",
                spec.depth(),
                self.layers.len()
            ));
        }
        for (l, w) in self.layers.iter().enumerate() {
            if w.shape() != spec.layer_shape(l) {
                return shape_err(format!(
                    "W_{l} is {:?}, expected {:?}",
                    w.shape(),
                    spec.layer_shape(l)
                ));
            }
        }
        match (&self.classifier, spec.classifier_shape()) {
            (None, None) => {}
            (Some(w), Some(s)) if w.shape() == s => {}
            (got, want) => {
                return shape_err(format!(
                    "classifier weight {:?}, expected {:?}",
                    got.as_ref().map(|w| w.shape()),
                    want
                ))
            }
        }
        if self.output.shape() != spec.output_shape() {
            return shape_err(format!(
                "output weight is {:?}, expected {:?}",
                self.output.shape(),
                spec.output_shape()
            ));
        }
        Ok(())
    }

    /// Checkpoint layout: `u64` LE header length, a JSON header with the
    /// matrix shapes, then every entry as `f64` LE in [`Self::matrices`]
    /// order, each matrix row-major.
    pub fn write_to(&self, mut w: impl Write) -> Result<()> {
        let header = CheckpointHeader {
            format: "kgcn-params-v1".into(),
            shapes: self.matrices().iter().map(|m| m.shape()).collect(),
            has_classifier: self.classifier.is_some(),
        };
        let json = serde_json::to_vec(&header)?;
        w.write_all(&(json.len() as u64).to_le_bytes())?;
        w.write_all(&json)?;
        for m in self.matrices() {
            for v in m.as_slice() {
                w.write_all(&v.to_le_bytes())?;
            }
        }
        Ok(())
    }

    pub fn read_from(mut r: impl Read) -> Result<Self> {
        let mut len = [0u8; 8];
        r.read_exact(&mut len)?;
        let len = u64::from_le_bytes(len) as usize;
        if len > 1 << 24 {
            return Err(Error::Dataset(format!("checkpoint header of {len} bytes")));
        }
        let mut json = vec![0u8; len];
        r.read_exact(&mut json)?;
        let header: CheckpointHeader = serde_json::from_slice(&json)?;
        if header.format != "kgcn-params-v1" {
            return Err(Error::Dataset(format!("unknown checkpoint format '{}'", header.format)));
        }
        let min = if header.has_classifier { 2 } else { 1 };
        if header.shapes.len() < min {
            return Err(Error::Dataset("checkpoint lists too few matrices".into()));
        }
        let mut mats = Vec::with_capacity(header.shapes.len());
        for &(rows, cols) in &header.shapes {
            let mut bytes = vec![0u8; rows * cols * 8];
            r.read_exact(&mut bytes)?;
            let data = bytes
                .chunks_exact(8)
                .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
                .collect();
            mats.push(DenseMatrix::from_vec(rows, cols, data)?);
        }
        let output = mats.pop().expect("at least one matrix");
        let classifier = if header.has_classifier { mats.pop() } else { None };
        Ok(Self {
            layers: mats,
            classifier,
            output,
        })
    }
}

#[derive(Serialize, Deserialize)]
struct CheckpointHeader {
    format: String,
    shapes: Vec<(usize, usize)>,
    has_classifier: bool,
}

/// Draws every weight from one seeded stream, in [`ModelParams::matrices`]
/// order.
pub fn init_params(spec: &ModelSpec, scheme: InitScheme, seed: u64) -> ModelParams {
    let mut rng = seeded(seed);
    let mut params = ModelParams::zeros(spec);
    for m in params.matrices_mut() {
        let (rows, cols) = m.shape();
        *m = match scheme {
            InitScheme::GlorotUniform => {
                let bound = (6.0 / (rows + cols) as f64).sqrt();
                DenseMatrix::from_fn(rows, cols, |_, _| rng.random_range(-bound..=bound))
            }
            InitScheme::Normal { sigma } => normal_matrix(rows, cols, sigma, &mut rng),
        };
    }
    params
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_same_params() {
        let spec = ModelSpec::snowball(6, 4, 3, 3);
        let a = init_params(&spec, InitScheme::GlorotUniform, 11);
        let b = init_params(&spec, InitScheme::GlorotUniform, 11);
        assert_eq!(a, b);
        assert_ne!(a, init_params(&spec, InitScheme::GlorotUniform, 12));
        a.check(&spec).unwrap();
    }

    #[test]
    fn glorot_variance() {
        let spec = ModelSpec::vanilla(100, 100, 0, 100, crate::linalg::Activation::Relu);
        let p = init_params(&spec, InitScheme::GlorotUniform, 3);
        let v = p.output.as_slice();
        let mean = v.iter().sum::<f64>() / v.len() as f64;
        let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / v.len() as f64;
        let expect = 2.0 / 200.0;
        assert!((var - expect).abs() < 0.2 * expect, "variance {var}");
    }

    #[test]
    fn checkpoint_round_trip() {
        let mut spec = ModelSpec::truncated_krylov(4, 3, 2, 2, 2);
        spec.classifier = crate::nn::Classifier::Dense { width: 5 };
        let p = init_params(&spec, InitScheme::Normal { sigma: 1.0 }, 9);
        let mut buf = Vec::new();
        p.write_to(&mut buf).unwrap();
        let q = ModelParams::read_from(buf.as_slice()).unwrap();
        assert_eq!(p, q);
        q.check(&spec).unwrap();
    }

    #[test]
    fn check_catches_wrong_shape() {
        let spec = ModelSpec::linear_snowball(3, 2, 2, 2);
        let mut p = ModelParams::zeros(&spec);
        p.layers[1] = DenseMatrix::zeros(2, 2);
        assert!(p.check(&spec).is_err());
    }
}
