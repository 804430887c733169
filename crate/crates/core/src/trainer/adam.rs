//! Adam optimizer over flat parameter vectors.

use serde::{Deserialize, Serialize};

use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, bound = "S: Scalar")]
pub struct AdamConfig<S> {
    pub lr: S,
    pub beta1: S,
    pub beta2: S,
    pub eps: S,
}

impl<S: Scalar> Default for AdamConfig<S> {
    fn default() -> Self {
        Self { lr: S::of(3e-4), beta1: S::of(0.9), beta2: S::of(0.999), eps: S::of(1e-8) }
    }
}

/// Adam state: first and second moment estimates plus the step counter.
/// Updates are bias-corrected.
#[derive(Debug, Clone)]
pub struct Adam<S> {
    config: AdamConfig<S>,
    m: Vec<S>,
    v: Vec<S>,
    t: u32,
}

impl<S: Scalar> Adam<S> {
    pub fn new(len: usize, config: AdamConfig<S>) -> Self {
        Self { config, m: vec![S::zero(); len], v: vec![S::zero(); len], t: 0 }
    }

    pub fn step_count(&self) -> u32 {
        self.t
    }

    /// Applies one update in place. `grads` must have the same length as
    /// the parameter vector.
    pub fn step(&mut self, params: &mut [S], grads: &[S]) {
        assert_eq!(params.len(), self.m.len(), "optimizer/parameter length mismatch");
        assert_eq!(grads.len(), self.m.len(), "gradient length mismatch");
        self.t += 1;
        let c = &self.config;
        let bc1 = S::one() - c.beta1.powi(self.t as i32);
        let bc2 = S::one() - c.beta2.powi(self.t as i32);
        for i in 0..params.len() {
            let g = grads[i];
            self.m[i] = c.beta1 * self.m[i] + (S::one() - c.beta1) * g;
            self.v[i] = c.beta2 * self.v[i] + (S::one() - c.beta2) * g * g;
            let mhat = self.m[i] / bc1;
            let vhat = self.v[i] / bc2;
            params[i] -= c.lr * mhat / (vhat.sqrt() + c.eps);
        }
    }
}
