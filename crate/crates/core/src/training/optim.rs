use serde::{Deserialize, Serialize};

use crate::linalg::DenseMatrix;
use crate::nn::ModelParams;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Optimizer {
    Adam,
    #[serde(alias = "RMSprop", alias = "RMSProp")]
    Rmsprop,
}

pub const ADAM_BETA1: f64 = 0.9;
pub const ADAM_BETA2: f64 = 0.999;
pub const RMSPROP_ALPHA: f64 = 0.99;
pub const EPS: f64 = 1e-8;

/// Moment buffers in the same layout as the parameters.
#[derive(Debug, Clone)]
pub struct OptimizerState {
    pub kind: Optimizer,
    pub step: u64,
    first: Vec<Vec<f64>>,
    second: Vec<Vec<f64>>,
}

impl OptimizerState {
    pub fn new(kind: Optimizer, params: &ModelParams) -> Self {
        let zeros = || -> Vec<Vec<f64>> {
            params
                .matrices()
                .iter()
                .map(|m| vec![0.0; m.as_slice().len()])
                .collect()
        };
        Self {
            kind,
            step: 0,
            first: zeros(),
            second: zeros(),
        }
    }

    pub fn apply(&mut self, params: &mut ModelParams, grads: &ModelParams, lr: f64, weight_decay: f64) {
        match self.kind {
            Optimizer::Adam => adam_step(params, grads, self, lr, weight_decay),
            Optimizer::Rmsprop => rmsprop_step(params, grads, self, lr, weight_decay),
        }
    }
}

fn pairs<'a>(
    params: &'a mut ModelParams,
    grads: &'a ModelParams,
) -> impl Iterator<Item = (&'a mut DenseMatrix, &'a DenseMatrix)> {
    params.matrices_mut().into_iter().zip(grads.matrices())
}

/// Adam with bias correction. Weight decay is added to the gradient
/// before the moments are updated.
pub fn adam_step(
    params: &mut ModelParams,
    grads: &ModelParams,
    state: &mut OptimizerState,
    lr: f64,
    weight_decay: f64,
) {
    state.step += 1;
    let t = state.step as i32;
    let c1 = 1.0 - ADAM_BETA1.powi(t);
    let c2 = 1.0 - ADAM_BETA2.powi(t);
    for (k, (w, g)) in pairs(params, grads).enumerate() {
        let m = &mut state.first[k];
        let v = &mut state.second[k];
        for (((wi, &gi), mi), vi) in w.as_mut_slice().iter_mut().zip(g.as_slice()).zip(m).zip(v) {
            let gi = gi + weight_decay * *wi;
            *mi = ADAM_BETA1 * *mi + (1.0 - ADAM_BETA1) * gi;
            *vi = ADAM_BETA2 * *vi + (1.0 - ADAM_BETA2) * gi * gi;
            let m_hat = *mi / c1;
            let v_hat = *vi / c2;
            *wi -= lr * m_hat / (v_hat.sqrt() + EPS);
        }
    }
}

/// RMSprop without momentum or centering.
pub fn rmsprop_step(
    params: &mut ModelParams,
    grads: &ModelParams,
    state: &mut OptimizerState,
    lr: f64,
    weight_decay: f64,
) {
    state.step += 1;
    for (k, (w, g)) in pairs(params, grads).enumerate() {
        let v = &mut state.second[k];
        for ((wi, &gi), vi) in w.as_mut_slice().iter_mut().zip(g.as_slice()).zip(v) {
            let gi = gi + weight_decay * *wi;
            *vi = RMSPROP_ALPHA * *vi + (1.0 - RMSPROP_ALPHA) * gi * gi;
            *wi -= lr * gi / (vi.sqrt() + EPS);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::Activation;
    use crate::nn::{init_params, InitScheme, ModelSpec};

    fn setup() -> (ModelParams, ModelParams) {
        let spec = ModelSpec::vanilla(3, 4, 1, 2, Activation::Relu);
        let p = init_params(&spec, InitScheme::GlorotUniform, 7);
        let g = p.zeros_like();
        (p, g)
    }

    fn fill(p: &mut ModelParams, v: f64) {
        for m in p.matrices_mut() {
            m.map_inplace(|_| v);
        }
    }

    #[test]
    fn first_adam_step_is_lr() {
        let (mut p, mut g) = setup();
        fill(&mut g, 1.0);
        let before = p.clone();
        let mut st = OptimizerState::new(Optimizer::Adam, &p);
        adam_step(&mut p, &g, &mut st, 1e-3, 0.0);
        // Exactly -lr / (1 + eps) in this form; other placements of eps
        // differ from it by O(eps * lr).
        let exact = -1e-3 / (1.0 + EPS);
        let alternative = -1e-3 / (1.0 + EPS * (1.0 - ADAM_BETA2).sqrt() / (1.0 - ADAM_BETA1));
        for (a, b) in p.matrices().iter().zip(before.matrices()) {
            for (x, y) in a.as_slice().iter().zip(b.as_slice()) {
                assert!(((x - y) - exact).abs() < 1e-15);
                assert!(((x - y) - alternative).abs() < 1e-7 * 1e-3);
            }
        }
    }

    #[test]
    fn zero_grads_leave_params() {
        for kind in [Optimizer::Adam, Optimizer::Rmsprop] {
            let (mut p, g) = setup();
            let before = p.clone();
            let mut st = OptimizerState::new(kind, &p);
            for _ in 0..3 {
                st.apply(&mut p, &g, 1e-2, 0.0);
            }
            assert_eq!(p, before);
        }
    }

    #[test]
    fn weight_decay_shrinks() {
        for kind in [Optimizer::Adam, Optimizer::Rmsprop] {
            let (mut p, g) = setup();
            let before = p.clone();
            let mut st = OptimizerState::new(kind, &p);
            st.apply(&mut p, &g, 1e-3, 1e-2);
            for (a, b) in p.matrices().iter().zip(before.matrices()) {
                for (x, y) in a.as_slice().iter().zip(b.as_slice()) {
                    if *y != 0.0 {
                        assert!(x.abs() < y.abs() && x.signum() == y.signum());
                    }
                }
            }
        }
    }

    #[test]
    fn adam_first_step_follows_gradient_sign() {
        let (mut p, mut g) = setup();
        for (k, m) in g.matrices_mut().into_iter().enumerate() {
            m.map_inplace(|_| if k % 2 == 0 { 1e6 } else { -3e5 });
        }
        let before = p.clone();
        let mut st = OptimizerState::new(Optimizer::Adam, &p);
        adam_step(&mut p, &g, &mut st, 1e-3, 0.0);
        for ((a, b), gm) in p.matrices().iter().zip(before.matrices()).zip(g.matrices()) {
            for ((x, y), gi) in a.as_slice().iter().zip(b.as_slice()).zip(gm.as_slice()) {
                assert!(((x - y) + 1e-3 * gi.signum()).abs() < 1e-12);
            }
        }
    }
}
