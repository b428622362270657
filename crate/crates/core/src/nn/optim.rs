use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum OptimizerKind {
    MomentumSgd,
    Adam { beta1: f64, beta2: f64, epsilon: f64 },
}

impl OptimizerKind {
    pub fn adam_default() -> Self {
        OptimizerKind::Adam {
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if let OptimizerKind::Adam {
            beta1,
            beta2,
            epsilon,
        } = *self
        {
            if !(0.0..1.0).contains(&beta1) || !(0.0..1.0).contains(&beta2) || !(epsilon > 0.0) {
                return Err(Error::config("adam needs beta1, beta2 in [0, 1) and epsilon > 0"));
            }
        }
        Ok(())
    }
}

/// Optimizer state for one parameter vector.
#[derive(Clone, Debug)]
pub struct Optimizer {
    kind: OptimizerKind,
    learning_rate: f64,
    momentum: f64,
    m: Vec<f64>,
    v: Vec<f64>,
    t: u64,
}

impl Optimizer {
    pub fn new(kind: OptimizerKind, learning_rate: f64, momentum: f64, n: usize) -> Self {
        let v = match kind {
            OptimizerKind::Adam { .. } => vec![0.0; n],
            OptimizerKind::MomentumSgd => Vec::new(),
        };
        Optimizer {
            kind,
            learning_rate,
            momentum,
            m: vec![0.0; n],
            v,
            t: 0,
        }
    }

    /// Applies one update for a gradient of the loss being minimized.
    pub fn step(&mut self, params: &mut [f64], grads: &[f64]) {
        debug_assert_eq!(params.len(), grads.len());
        self.t += 1;
        let lr = self.learning_rate;
        match self.kind {
            OptimizerKind::MomentumSgd => {
                let mu = self.momentum;
                for ((p, g), m) in params.iter_mut().zip(grads).zip(self.m.iter_mut()) {
                    *m = mu * *m - lr * g;
                    *p += *m;
                }
            }
            OptimizerKind::Adam {
                beta1,
                beta2,
                epsilon,
            } => {
                let c1 = 1.0 - beta1.powi(self.t as i32);
                let c2 = 1.0 - beta2.powi(self.t as i32);
                for (((p, g), m), v) in params
                    .iter_mut()
                    .zip(grads)
                    .zip(self.m.iter_mut())
                    .zip(self.v.iter_mut())
                {
                    *m = beta1 * *m + (1.0 - beta1) * g;
                    *v = beta2 * *v + (1.0 - beta2) * g * g;
                    let mhat = *m / c1;
                    let vhat = *v / c2;
                    *p -= lr * mhat / (vhat.sqrt() + epsilon);
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn minimize(kind: OptimizerKind, lr: f64, steps: usize) -> f64 {
        // f(x) = (x - 3)^2
        let mut x = [0.0];
        let mut opt = Optimizer::new(kind, lr, 0.9, 1);
        for _ in 0..steps {
            let g = [2.0 * (x[0] - 3.0)];
            opt.step(&mut x, &g);
        }
        x[0]
    }

    #[test]
    fn both_optimizers_reach_quadratic_minimum() {
        assert!((minimize(OptimizerKind::MomentumSgd, 0.05, 500) - 3.0).abs() < 1e-6);
        assert!((minimize(OptimizerKind::adam_default(), 0.05, 3000) - 3.0).abs() < 1e-3);
    }

    #[test]
    fn first_adam_step_has_size_lr() {
        let mut x = [1.0];
        let mut opt = Optimizer::new(OptimizerKind::adam_default(), 0.01, 0.0, 1);
        opt.step(&mut x, &[123.0]);
        assert!((x[0] - 0.99).abs() < 1e-9);
    }
}
