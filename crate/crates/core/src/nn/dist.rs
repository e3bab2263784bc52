//! Diagonal Gaussian policy densities, plain and tanh-squashed.
//!
//! Functions take per-sample slices so they work for any action dimension.

use rand_distr::{Distribution, StandardNormal};

use crate::rng::Rng;

pub const LOG_STD_MIN: f64 = -20.0;
pub const LOG_STD_MAX: f64 = 2.0;

const HALF_LOG_2PI: f64 = 0.918_938_533_204_672_8;

pub fn clamp_log_std(x: f64) -> f64 {
    x.clamp(LOG_STD_MIN, LOG_STD_MAX)
}

pub fn standard_normal(rng: &mut Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| StandardNormal.sample(rng)).collect()
}

pub fn gaussian_log_prob(mean: &[f64], log_std: &[f64], a: &[f64]) -> f64 {
    mean.iter()
        .zip(log_std)
        .zip(a)
        .map(|((m, ls), x)| {
            let z = (x - m) / ls.exp();
            -0.5 * z * z - ls - HALF_LOG_2PI
        })
        .sum()
}

/// Gradients of the log-density with respect to the mean and the log-std.
pub fn gaussian_log_prob_grad(mean: &[f64], log_std: &[f64], a: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let mut dm = Vec::with_capacity(mean.len());
    let mut ds = Vec::with_capacity(mean.len());
    for ((m, ls), x) in mean.iter().zip(log_std).zip(a) {
        let sd = ls.exp();
        let z = (x - m) / sd;
        dm.push(z / sd);
        ds.push(z * z - 1.0);
    }
    (dm, ds)
}

pub fn gaussian_entropy(log_std: &[f64]) -> f64 {
    log_std.iter().map(|ls| ls + 0.5 + HALF_LOG_2PI).sum()
}

/// KL(p ‖ q) between diagonal Gaussians.
pub fn gaussian_kl(mean_p: &[f64], log_std_p: &[f64], mean_q: &[f64], log_std_q: &[f64]) -> f64 {
    let mut kl = 0.0;
    for k in 0..mean_p.len() {
        let (vp, vq) = ((2.0 * log_std_p[k]).exp(), (2.0 * log_std_q[k]).exp());
        let d = mean_p[k] - mean_q[k];
        kl += log_std_q[k] - log_std_p[k] + (vp + d * d) / (2.0 * vq) - 0.5;
    }
    kl
}

pub fn sample_gaussian(mean: &[f64], log_std: &[f64], rng: &mut Rng) -> Vec<f64> {
    let eps = standard_normal(rng, mean.len());
    mean.iter().zip(log_std).zip(eps).map(|((m, ls), e)| m + ls.exp() * e).collect()
}

fn softplus(x: f64) -> f64 {
    if x > 30.0 {
        x
    } else {
        x.exp().ln_1p()
    }
}

/// `log(1 − tanh²u)` in a form that stays finite for large `|u|`.
pub fn log_one_minus_tanh_sq(u: f64) -> f64 {
    2.0 * (std::f64::consts::LN_2 - u - softplus(-2.0 * u))
}

#[derive(Debug, Clone, PartialEq)]
pub struct SquashedSample {
    pub action: Vec<f64>,
    /// Pre-squash value `u = μ + σ·ε`.
    pub pre: Vec<f64>,
    pub eps: Vec<f64>,
    pub log_prob: f64,
}

/// Reparameterised sample `a = tanh(μ + σ·ε)`; `log_std` is clamped first.
pub fn squashed_sample(mean: &[f64], log_std: &[f64], eps: &[f64]) -> SquashedSample {
    let mut action = Vec::with_capacity(mean.len());
    let mut pre = Vec::with_capacity(mean.len());
    let mut log_prob = 0.0;
    for k in 0..mean.len() {
        let ls = clamp_log_std(log_std[k]);
        let u = mean[k] + ls.exp() * eps[k];
        log_prob += -0.5 * eps[k] * eps[k] - ls - HALF_LOG_2PI - log_one_minus_tanh_sq(u);
        pre.push(u);
        action.push(u.tanh());
    }
    SquashedSample { action, pre, eps: eps.to_vec(), log_prob }
}

/// Log-density of a squashed action `a ∈ (−1, 1)`.
pub fn squashed_log_prob(mean: &[f64], log_std: &[f64], a: &[f64]) -> f64 {
    (0..mean.len())
        .map(|k| {
            let ls = clamp_log_std(log_std[k]);
            let u = a[k].atanh();
            let z = (u - mean[k]) / ls.exp();
            -0.5 * z * z - ls - HALF_LOG_2PI - log_one_minus_tanh_sq(u)
        })
        .sum()
}

/// Gradient of `coef_logp · log π(a) + ⟨dloss_da, a⟩` for a reparameterised
/// sample, with respect to the mean and the unclamped log-std.
pub fn squashed_backward(
    mean: &[f64],
    log_std: &[f64],
    sample: &SquashedSample,
    coef_logp: f64,
    dloss_da: &[f64],
) -> (Vec<f64>, Vec<f64>) {
    let mut dm = Vec::with_capacity(mean.len());
    let mut ds = Vec::with_capacity(mean.len());
    for k in 0..mean.len() {
        let a = sample.action[k];
        let du = coef_logp * 2.0 * a + dloss_da[k] * (1.0 - a * a);
        dm.push(du);
        let raw = log_std[k];
        if (LOG_STD_MIN..=LOG_STD_MAX).contains(&raw) {
            let sd = raw.exp();
            ds.push(du * sd * sample.eps[k] - coef_logp);
        } else {
            ds.push(0.0);
        }
    }
    (dm, ds)
}
