use serde::{Deserialize, Serialize};

use crate::nn::mlp::Real;

pub const ADAM_BETA1: f64 = 0.9;
pub const ADAM_BETA2: f64 = 0.999;
pub const ADAM_EPS: f64 = 1e-8;
pub const RMSPROP_RHO: f64 = 0.99;
pub const RMSPROP_EPS: f64 = 1e-8;

/// Adam with bias correction. Minimises: parameters move against the gradient.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Adam {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    m: Vec<f64>,
    v: Vec<f64>,
    t: u64,
}

impl Adam {
    pub fn new(n_params: usize, lr: f64) -> Self {
        Self {
            lr,
            beta1: ADAM_BETA1,
            beta2: ADAM_BETA2,
            eps: ADAM_EPS,
            m: vec![0.0; n_params],
            v: vec![0.0; n_params],
            t: 0,
        }
    }

    pub fn step<F: Real>(&mut self, params: &mut [F], grads: &[f64]) {
        assert_eq!(params.len(), self.m.len(), "optimizer built for another parameter count");
        assert_eq!(grads.len(), self.m.len(), "gradient length mismatch");
        self.t += 1;
        let c1 = 1.0 - self.beta1.powf(self.t as f64);
        let c2 = 1.0 - self.beta2.powf(self.t as f64);
        for k in 0..params.len() {
            let g = grads[k];
            self.m[k] = self.beta1 * self.m[k] + (1.0 - self.beta1) * g;
            self.v[k] = self.beta2 * self.v[k] + (1.0 - self.beta2) * g * g;
            let m_hat = self.m[k] / c1;
            let v_hat = self.v[k] / c2;
            let p = params[k].f64() - self.lr * m_hat / (v_hat.sqrt() + self.eps);
            params[k] = F::of(p);
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RmsProp {
    pub lr: f64,
    pub rho: f64,
    pub eps: f64,
    sq: Vec<f64>,
}

impl RmsProp {
    pub fn new(n_params: usize, lr: f64) -> Self {
        Self { lr, rho: RMSPROP_RHO, eps: RMSPROP_EPS, sq: vec![0.0; n_params] }
    }

    pub fn step<F: Real>(&mut self, params: &mut [F], grads: &[f64]) {
        assert_eq!(params.len(), self.sq.len(), "optimizer built for another parameter count");
        assert_eq!(grads.len(), self.sq.len(), "gradient length mismatch");
        for k in 0..params.len() {
            let g = grads[k];
            self.sq[k] = self.rho * self.sq[k] + (1.0 - self.rho) * g * g;
            let p = params[k].f64() - self.lr * g / (self.sq[k].sqrt() + self.eps);
            params[k] = F::of(p);
        }
    }
}
