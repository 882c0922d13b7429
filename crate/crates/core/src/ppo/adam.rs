//! Adam over the flat tensor list of [`PolicyParams`].

use crate::policy::{ParamGrads, PolicyParams};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self { lr: 3e-4, beta1: 0.9, beta2: 0.999, eps: 1e-8 }
    }
}

/// Step count and moment estimates, shaped like the parameters.
#[derive(Clone, Debug, PartialEq)]
pub struct Adam {
    pub t: u64,
    pub m: PolicyParams,
    pub v: PolicyParams,
}

impl Adam {
    pub fn new(params: &PolicyParams) -> Self {
        Self { t: 0, m: params.zeros_like(), v: params.zeros_like() }
    }

    /// One bias-corrected descent step.
    pub fn step(&mut self, cfg: &AdamConfig, params: &mut PolicyParams, grads: &ParamGrads) {
        self.t += 1;
        let t = self.t as i32;
        let c1 = 1.0 - cfg.beta1.powi(t);
        let c2 = 1.0 - cfg.beta2.powi(t);
        let step = cfg.lr * c2.sqrt() / c1;
        let eps = cfg.eps * c2.sqrt();
        let ps = params.tensors_mut();
        let ms = self.m.tensors_mut();
        let vs = self.v.tensors_mut();
        for (((p, m), v), g) in ps.into_iter().zip(ms).zip(vs).zip(grads.tensors()) {
            for i in 0..p.len() {
                m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g[i];
                v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g[i] * g[i];
                p[i] -= step * m[i] / (v[i].sqrt() + eps);
            }
        }
    }
}
