use serde::{Deserialize, Serialize};

use super::{Gradients, Params, Tensor, TensorError, TensorResult};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AdamConfig {
    pub learning_rate: f64,
    /// L2 coefficient added to the gradient before the moment updates.
    pub weight_decay: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.01,
            weight_decay: 5e-4,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

/// Adam with classic L2 weight decay (`g + λ·θ`).
#[derive(Debug, Clone)]
pub struct Adam {
    pub config: AdamConfig,
    first: Vec<Tensor>,
    second: Vec<Tensor>,
    step: u64,
}

impl Adam {
    pub fn new(config: AdamConfig, params: &Params) -> Self {
        let zeros = || {
            params
                .iter()
                .map(|(_, t)| Tensor::zeros(t.rows(), t.cols()))
                .collect::<Vec<_>>()
        };
        Self {
            config,
            first: zeros(),
            second: zeros(),
            step: 0,
        }
    }

    pub fn steps(&self) -> u64 {
        self.step
    }

    pub fn first_moments(&self) -> &[Tensor] {
        &self.first
    }

    pub fn second_moments(&self) -> &[Tensor] {
        &self.second
    }

    pub fn step(&mut self, params: &mut Params, grads: &Gradients) -> TensorResult<()> {
        if grads.len() != params.len() || self.first.len() != params.len() {
            return Err(TensorError::ShapeMismatch {
                op: "adam_step",
                left: [params.len(), 0],
                right: [grads.len(), 0],
            });
        }
        for (id, (m, v)) in params.ids().zip(self.first.iter().zip(&self.second)) {
            let (p, g) = (params.get(id), grads.get(id));
            if p.shape() != g.shape() || p.shape() != m.shape() || p.shape() != v.shape() {
                return Err(TensorError::ShapeMismatch {
                    op: "adam_step",
                    left: p.shape(),
                    right: g.shape(),
                });
            }
        }

        self.step += 1;
        let AdamConfig {
            learning_rate: lr,
            weight_decay: wd,
            beta1: b1,
            beta2: b2,
            epsilon: eps,
        } = self.config;
        let t = self.step as i32;
        let c1 = 1.0 - b1.powi(t);
        let c2 = 1.0 - b2.powi(t);

        for (k, id) in params.ids().enumerate() {
            if !params.is_trainable(id) {
                continue;
            }
            let g = grads.get(id).data();
            let m = self.first[k].data_mut();
            let v = self.second[k].data_mut();
            let p = params.get_mut(id).data_mut();
            for i in 0..p.len() {
                let gi = g[i] + wd * p[i];
                m[i] = b1 * m[i] + (1.0 - b1) * gi;
                v[i] = b2 * v[i] + (1.0 - b2) * gi * gi;
                let m_hat = m[i] / c1;
                let v_hat = v[i] / c2;
                p[i] -= lr * m_hat / (v_hat.sqrt() + eps);
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::Tape;

    fn scalar_problem(x0: f64) -> (Params, crate::tensor::ParamId) {
        let mut p = Params::new();
        let id = p.add("x", Tensor::scalar(x0));
        (p, id)
    }

    fn grads_for(p: &Params, scale: f64) -> Gradients {
        // loss = scale * x, so dL/dx = scale
        let mut tape = Tape::new(p);
        let x = tape.param(p.ids().next().unwrap());
        let l = tape.scale(x, scale).unwrap();
        tape.backward(l).unwrap()
    }

    #[test]
    fn two_step_recurrence_matches_hand_computation() {
        let cfg = AdamConfig {
            learning_rate: 0.1,
            weight_decay: 0.0,
            ..AdamConfig::default()
        };
        let (mut p, id) = scalar_problem(1.0);
        let mut adam = Adam::new(cfg, &p);

        // hand-rolled recurrence with gradients 2.0 then -1.0
        let (b1, b2, eps, lr) = (0.9f64, 0.999f64, 1e-8, 0.1);
        let mut x = 1.0;
        let (mut m, mut v) = (0.0, 0.0);
        for (t, g) in [(1, 2.0), (2, -1.0)] {
            m = b1 * m + (1.0 - b1) * g;
            v = b2 * v + (1.0 - b2) * g * g;
            let mh = m / (1.0 - b1.powi(t));
            let vh = v / (1.0 - b2.powi(t));
            x -= lr * mh / (vh.sqrt() + eps);
        }

        {
            let g = grads_for(&p, 2.0);
            adam.step(&mut p, &g)
        }
        .unwrap();
        assert!((p.get(id).item() - (1.0 - 0.1 * 1.0 / (1.0 + 1e-8 / 2.0))).abs() < 1e-12);
        {
            let g = grads_for(&p, -1.0);
            adam.step(&mut p, &g)
        }
        .unwrap();
        assert!((p.get(id).item() - x).abs() < 1e-12);
        assert_eq!(adam.steps(), 2);
    }

    #[test]
    fn zero_gradient_without_decay_leaves_params() {
        let cfg = AdamConfig {
            weight_decay: 0.0,
            ..AdamConfig::default()
        };
        let (mut p, id) = scalar_problem(0.7);
        let mut adam = Adam::new(cfg, &p);
        {
            let g = grads_for(&p, 3.0);
            adam.step(&mut p, &g)
        }
        .unwrap();
        let after_first = p.get(id).item();
        let m_before = adam.first_moments()[0].item();
        {
            let g = grads_for(&p, 0.0);
            adam.step(&mut p, &g)
        }
        .unwrap();
        // the first moment still carries momentum, so check with lr = 0 too
        assert!((adam.first_moments()[0].item() - 0.9 * m_before).abs() < 1e-15);

        let (mut p2, id2) = scalar_problem(0.7);
        let mut adam2 = Adam::new(cfg, &p2);
        {
            let g = grads_for(&p2, 0.0);
            adam2.step(&mut p2, &g)
        }
        .unwrap();
        assert_eq!(p2.get(id2).item(), 0.7);
        assert_ne!(after_first, 0.7);
    }

    #[test]
    fn zero_learning_rate_is_a_no_op() {
        let cfg = AdamConfig {
            learning_rate: 0.0,
            ..AdamConfig::default()
        };
        let (mut p, id) = scalar_problem(-1.5);
        let mut adam = Adam::new(cfg, &p);
        for _ in 0..3 {
            {
                let g = grads_for(&p, 4.0);
                adam.step(&mut p, &g)
            }
            .unwrap();
        }
        assert_eq!(p.get(id).item(), -1.5);
    }

    #[test]
    fn weight_decay_is_added_to_gradient() {
        let cfg = AdamConfig {
            weight_decay: 0.5,
            ..AdamConfig::default()
        };
        let (mut p, _) = scalar_problem(2.0);
        let mut adam = Adam::new(cfg, &p);
        {
            let g = grads_for(&p, 0.0);
            adam.step(&mut p, &g)
        }
        .unwrap();
        // effective gradient 0.5 * 2.0 = 1.0
        assert!((adam.first_moments()[0].item() - 0.1).abs() < 1e-15);
    }

    #[test]
    fn statistics_are_not_updated() {
        let mut p = Params::new();
        let x = p.add("x", Tensor::scalar(2.0));
        let s = p.add_statistic("s", Tensor::scalar(5.0));
        let mut adam = Adam::new(AdamConfig::default(), &p);
        {
            let g = grads_for(&p, 1.0);
            adam.step(&mut p, &g)
        }
        .unwrap();
        assert_ne!(p.get(x).item(), 2.0);
        assert_eq!(p.get(s).item(), 5.0);
    }

    #[test]
    fn shape_mismatch_is_rejected() {
        let (mut p, _) = scalar_problem(1.0);
        let mut adam = Adam::new(AdamConfig::default(), &Params::new());
        let g = grads_for(&p, 1.0);
        assert!(adam.step(&mut p, &g).is_err());
    }
}
