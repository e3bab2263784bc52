//! REINFORCE, A2C, TRPO, ACKTR and PPO over a Gaussian policy with a
//! state-independent log-std.

use ndarray::{Array2, ArrayView2};
use rand_distr::{Distribution, StandardNormal};

use crate::agents::agent::{checkpoint_meta, Agent, Losses};
use crate::agents::buffers::RolloutBuffer;
use crate::agents::hyper::{AgentHyperparams, Algorithm};
use crate::agents::policy::{layer_sizes, mse_grad, Policy, PolicyHead, ACTION_DIM};
use crate::agents::returns::{discounted_returns, gae_with_next, normalize};
use crate::env::TransitionBatch;
use crate::nn::dist::{clamp_log_std, gaussian_entropy, gaussian_kl, gaussian_log_prob, gaussian_log_prob_grad};
use crate::nn::{Adam, BackwardOptions, Checkpoint, Kfac, KfacStep, Mlp, Real, RmsProp, Tape};
use crate::rng::Rng;
use crate::{Error, Result};

/// Loss value and its gradients with respect to the per-row means and the
/// shared log-std.
#[derive(Debug, Clone)]
pub struct PgGrads {
    pub loss: f64,
    pub mean: Array2<f32>,
    pub log_std: Vec<f64>,
}

fn mean_row(means: &Array2<f32>, i: usize) -> [f64; 3] {
    [means[[i, 0]] as f64, means[[i, 1]] as f64, means[[i, 2]] as f64]
}

fn action_f64(a: &[f32; 3]) -> [f64; 3] {
    [a[0] as f64, a[1] as f64, a[2] as f64]
}

pub fn log_probs(means: &Array2<f32>, log_std: &[f64], actions: &[[f32; 3]]) -> Vec<f64> {
    (0..actions.len())
        .map(|i| gaussian_log_prob(&mean_row(means, i), log_std, &action_f64(&actions[i])))
        .collect()
}

/// Chains per-row `∂L/∂log π_t` through the Gaussian density.
pub fn log_prob_chain(
    means: &Array2<f32>,
    log_std: &[f64],
    actions: &[[f32; 3]],
    dlogp: &[f64],
) -> (Array2<f32>, Vec<f64>) {
    let mut dmean = Array2::zeros((actions.len(), ACTION_DIM));
    let mut dls = vec![0.0; ACTION_DIM];
    for i in 0..actions.len() {
        let (dm, ds) = gaussian_log_prob_grad(&mean_row(means, i), log_std, &action_f64(&actions[i]));
        for k in 0..ACTION_DIM {
            dmean[[i, k]] = (dlogp[i] * dm[k]) as f32;
            dls[k] += dlogp[i] * ds[k];
        }
    }
    (dmean, dls)
}

/// `L = −mean(w_t · log π(a_t|s_t)) − c·H(π)`.
pub fn policy_gradient(
    means: &Array2<f32>,
    log_std: &[f64],
    actions: &[[f32; 3]],
    weights: &[f64],
    entropy_coef: f64,
) -> PgGrads {
    let n = actions.len().max(1) as f64;
    let logp = log_probs(means, log_std, actions);
    let loss = -logp.iter().zip(weights).map(|(l, w)| l * w).sum::<f64>() / n - entropy_coef * gaussian_entropy(log_std);
    let dlogp: Vec<f64> = weights.iter().map(|w| -w / n).collect();
    let (mean, mut dls) = log_prob_chain(means, log_std, actions, &dlogp);
    for d in &mut dls {
        *d -= entropy_coef;
    }
    PgGrads { loss, mean, log_std: dls }
}

pub fn clip_ratio(ratio: f64, eps: f64) -> f64 {
    ratio.clamp(1.0 - eps, 1.0 + eps)
}

/// `min(ρ·A, clip(ρ, 1 − ε, 1 + ε)·A)`.
pub fn ppo_objective(ratio: f64, adv: f64, eps: f64) -> f64 {
    (ratio * adv).min(clip_ratio(ratio, eps) * adv)
}

fn ppo_objective_dratio(ratio: f64, adv: f64, eps: f64) -> f64 {
    if ratio * adv <= clip_ratio(ratio, eps) * adv {
        adv
    } else {
        0.0
    }
}

/// `L = −mean(min(ρA, clip(ρ)A)) − c·H(π)` with `ρ = π/π_old`.
pub fn ppo_gradient(
    means: &Array2<f32>,
    log_std: &[f64],
    actions: &[[f32; 3]],
    logp_old: &[f64],
    adv: &[f64],
    eps: f64,
    entropy_coef: f64,
) -> PgGrads {
    let n = actions.len().max(1) as f64;
    let logp = log_probs(means, log_std, actions);
    let mut obj = 0.0;
    let mut dlogp = Vec::with_capacity(logp.len());
    for i in 0..logp.len() {
        let r = (logp[i] - logp_old[i]).exp();
        obj += ppo_objective(r, adv[i], eps);
        dlogp.push(-ppo_objective_dratio(r, adv[i], eps) * r / n);
    }
    let loss = -obj / n - entropy_coef * gaussian_entropy(log_std);
    let (mean, mut dls) = log_prob_chain(means, log_std, actions, &dlogp);
    for d in &mut dls {
        *d -= entropy_coef;
    }
    PgGrads { loss, mean, log_std: dls }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Solves `F x = b` by conjugate gradient given products with `F`.
pub fn conjugate_gradient(mut fvp: impl FnMut(&[f64]) -> Vec<f64>, b: &[f64], iters: usize, tol: f64) -> Vec<f64> {
    let mut x = vec![0.0; b.len()];
    let mut r = b.to_vec();
    let mut p = b.to_vec();
    let mut rr = dot(&r, &r);
    for _ in 0..iters {
        if rr <= tol * tol {
            break;
        }
        let ap = fvp(&p);
        let pap = dot(&p, &ap);
        if pap <= 0.0 {
            break;
        }
        let alpha = rr / pap;
        for k in 0..x.len() {
            x[k] += alpha * p[k];
            r[k] -= alpha * ap[k];
        }
        let rr_new = dot(&r, &r);
        let beta = rr_new / rr;
        for k in 0..p.len() {
            p[k] = r[k] + beta * p[k];
        }
        rr = rr_new;
    }
    x
}

/// Product of the KL Hessian of a Gaussian policy with `v`, which holds the
/// network parameters followed by the log-std entries, plus `damping·v`.
pub fn fisher_vector_product<F: Real>(
    net: &Mlp<F>,
    tape: &Tape<F>,
    log_std: &[f64],
    v: &[f64],
    damping: f64,
) -> Result<Vec<f64>> {
    let n_net = net.params().len();
    if v.len() != n_net + log_std.len() {
        return Err(Error::ShapeMismatch("tangent does not cover the policy parameters".into()));
    }
    let vn: Vec<F> = v[..n_net].iter().map(|&x| F::of(x)).collect();
    let mut jv = net.jvp(tape, &vn)?;
    let rows = jv.nrows().max(1) as f64;
    for mut row in jv.rows_mut() {
        for (k, x) in row.iter_mut().enumerate() {
            *x = F::of(x.f64() * (-2.0 * clamp_log_std(log_std[k])).exp() / rows);
        }
    }
    let mut out = net.backward(tape, jv.view(), BackwardOptions::default())?.params;
    out.extend(v[n_net..].iter().map(|x| 2.0 * x));
    for (o, x) in out.iter_mut().zip(v) {
        *o += damping * x;
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineSearch {
    pub accepted: bool,
    pub backtracks: usize,
    pub kl: f64,
    pub improvement: f64,
}

/// Tries `θ0 + coefᵏ·step` for `k = 0..=max_backtracks` and returns the first
/// point where `eval` (surrogate, KL) improves on `f0` with KL ≤ `delta`.
pub fn line_search(
    theta0: &[f64],
    step: &[f64],
    f0: f64,
    mut eval: impl FnMut(&[f64]) -> (f64, f64),
    delta: f64,
    max_backtracks: usize,
    coef: f64,
) -> (Option<Vec<f64>>, LineSearch) {
    let mut frac = 1.0;
    let mut last = LineSearch { accepted: false, backtracks: 0, kl: 0.0, improvement: 0.0 };
    for k in 0..=max_backtracks {
        let theta: Vec<f64> = theta0.iter().zip(step).map(|(t, s)| t + frac * s).collect();
        let (f, kl) = eval(&theta);
        last = LineSearch { accepted: false, backtracks: k, kl, improvement: f - f0 };
        if f > f0 && kl <= delta && f.is_finite() {
            last.accepted = true;
            return (Some(theta), last);
        }
        frac *= coef;
    }
    (None, last)
}

/// Step scale that puts the quadratic KL estimate of `x` at `delta`, capped
/// at the full step.
pub fn trust_region_scale(x: &[f64], fx: &[f64], delta: f64) -> f64 {
    let shs = dot(x, fx);
    if shs > 0.0 {
        (2.0 * delta / shs).sqrt().min(1.0)
    } else {
        0.0
    }
}

enum Optim {
    Vpg { actor: RmsProp, log_std: RmsProp },
    A2c { actor: RmsProp, log_std: RmsProp, critic: RmsProp },
    Trpo { critic: Adam },
    Acktr { actor: Box<Kfac>, critic: Box<Kfac> },
    Ppo { actor: Adam, log_std: Adam, critic: Adam },
}

pub struct OnPolicyAgent {
    algo: Algorithm,
    hp: AgentHyperparams,
    policy: Policy,
    critic: Option<Mlp<f32>>,
    optim: Optim,
    buffer: RolloutBuffer,
    last_line_search: Option<LineSearch>,
    last_kfac: Option<(KfacStep, KfacStep)>,
    /// Skips the K-FAC statistics update, keeping the current factors.
    pub(crate) freeze_kfac: bool,
}

struct Prepared<'a> {
    states: ArrayView2<'a, f32>,
    actions: &'a [[f32; 3]],
    adv: Vec<f64>,
    targets: Vec<f64>,
}

impl OnPolicyAgent {
    pub fn new(algo: Algorithm, hp: AgentHyperparams, state_dim: usize, rng: &mut Rng) -> Result<Self> {
        if !algo.is_on_policy() {
            return Err(Error::InvalidConfig(format!("{algo} is not an on-policy algorithm")));
        }
        hp.validate()?;
        let policy = Policy::new(PolicyHead::Gaussian, state_dim, &hp.hidden, hp.activation, hp.init_log_std, rng)?;
        let critic = if algo == Algorithm::Vpg {
            None
        } else {
            Some(Mlp::new(&layer_sizes(state_dim, &hp.hidden, 1), hp.activation, rng)?)
        };
        let np = policy.net.params().len();
        let nc = critic.as_ref().map_or(0, |c| c.params().len());
        let optim = match algo {
            Algorithm::Vpg => Optim::Vpg { actor: RmsProp::new(np, hp.lr), log_std: RmsProp::new(ACTION_DIM, hp.lr) },
            Algorithm::A2c => Optim::A2c {
                actor: RmsProp::new(np, hp.lr),
                log_std: RmsProp::new(ACTION_DIM, hp.lr),
                critic: RmsProp::new(nc, hp.lr),
            },
            Algorithm::Trpo => Optim::Trpo { critic: Adam::new(nc, hp.lr) },
            Algorithm::Acktr => Optim::Acktr {
                actor: Box::new(Kfac::new(&policy.net, hp.lr, hp.delta)),
                critic: Box::new(Kfac::new(critic.as_ref().unwrap(), hp.lr, hp.delta)),
            },
            _ => Optim::Ppo {
                actor: Adam::new(np, hp.lr),
                log_std: Adam::new(ACTION_DIM, hp.lr),
                critic: Adam::new(nc, hp.lr),
            },
        };
        Ok(Self {
            algo,
            hp,
            policy,
            critic,
            optim,
            buffer: RolloutBuffer::new(state_dim),
            last_line_search: None,
            last_kfac: None,
            freeze_kfac: false,
        })
    }

    pub fn policy_mut(&mut self) -> &mut Policy {
        &mut self.policy
    }

    pub fn critic(&self) -> Option<&Mlp<f32>> {
        self.critic.as_ref()
    }

    pub fn critic_mut(&mut self) -> Option<&mut Mlp<f32>> {
        self.critic.as_mut()
    }

    pub fn kfac_mut(&mut self) -> Option<(&mut Kfac, &mut Kfac)> {
        match &mut self.optim {
            Optim::Acktr { actor, critic } => Some((actor, critic)),
            _ => None,
        }
    }

    /// Actor and critic K-FAC steps of the most recent ACKTR update.
    pub fn last_kfac_steps(&self) -> Option<(KfacStep, KfacStep)> {
        self.last_kfac
    }

    /// Outcome of the most recent TRPO line search.
    pub fn last_line_search(&self) -> Option<LineSearch> {
        self.last_line_search
    }

    fn prepare<'a>(&self, batch: &'a TransitionBatch) -> Result<Prepared<'a>> {
        let n = batch.len();
        let d = batch.state_dim;
        let states = ArrayView2::from_shape((n, d), &batch.states[..])
            .map_err(|e| Error::ShapeMismatch(e.to_string()))?;
        let (mut adv, targets) = match &self.critic {
            None => {
                let g = discounted_returns(&batch.rewards, self.hp.gamma, &batch.dones);
                (g.clone(), g)
            }
            Some(c) => {
                let next = ArrayView2::from_shape((n, d), &batch.next_states[..])
                    .map_err(|e| Error::ShapeMismatch(e.to_string()))?;
                let v: Vec<f64> = c.forward(states)?.iter().map(|&x| x as f64).collect();
                let vn: Vec<f64> = c.forward(next)?.iter().map(|&x| x as f64).collect();
                let terminal: Vec<bool> = batch.dones.iter().zip(&batch.truncated).map(|(d, t)| *d && !t).collect();
                let a = gae_with_next(&batch.rewards, &v, &vn, self.hp.gamma, self.hp.lambda, &terminal, &batch.dones);
                let targets = a.iter().zip(&v).map(|(a, v)| a + v).collect();
                (a, targets)
            }
        };
        if self.hp.normalize_advantages {
            normalize(&mut adv);
        }
        Ok(Prepared { states, actions: &batch.actions, adv, targets })
    }

    fn critic_grads(&self, states: ArrayView2<'_, f32>, targets: &[f64]) -> Result<(f64, Tape<f32>, Vec<f64>)> {
        let c = self.critic.as_ref().expect("algorithm has a critic");
        let tape = c.forward_tape(states)?;
        let (loss, dy) = mse_grad(tape.output(), targets);
        let g = c.backward(&tape, dy.view(), BackwardOptions::default())?.params;
        Ok((loss, tape, g))
    }

    /// Clamps the log-std and rounds it to the f32 precision it is
    /// checkpointed at.
    fn clamp_log_std(&mut self) {
        for v in &mut self.policy.log_std {
            *v = clamp_log_std(*v) as f32 as f64;
        }
    }

    /// One policy update on a complete batch of transitions grouped by
    /// trajectory.
    pub fn update(&mut self, batch: &TransitionBatch, rng: &mut Rng) -> Result<Losses> {
        let mut losses = Losses::default();
        if batch.is_empty() {
            return Ok(losses);
        }
        let p = self.prepare(batch)?;
        match self.algo {
            Algorithm::Vpg | Algorithm::A2c => {
                let tape = self.policy.net.forward_tape(p.states)?;
                let pg = policy_gradient(tape.output(), &self.policy.log_std, p.actions, &p.adv, self.hp.entropy_coef);
                let g = self.policy.net.backward(&tape, pg.mean.view(), BackwardOptions::default())?.params;
                losses.add_actor(pg.loss);
                let critic = if self.critic.is_some() { Some(self.critic_grads(p.states, &p.targets)?) } else { None };
                match &mut self.optim {
                    Optim::Vpg { actor, log_std } => {
                        actor.step(self.policy.net.params_mut(), &g);
                        log_std.step(&mut self.policy.log_std, &pg.log_std);
                    }
                    Optim::A2c { actor, log_std, critic: copt } => {
                        actor.step(self.policy.net.params_mut(), &g);
                        log_std.step(&mut self.policy.log_std, &pg.log_std);
                        let (loss, _, cg) = critic.expect("a2c has a critic");
                        copt.step(self.critic.as_mut().unwrap().params_mut(), &cg);
                        losses.add_critic(loss);
                    }
                    _ => unreachable!(),
                }
                self.clamp_log_std();
            }
            Algorithm::Ppo => {
                let means_old = self.policy.net.forward(p.states)?;
                let logp_old = log_probs(&means_old, &self.policy.log_std, p.actions);
                for _ in 0..self.hp.epochs {
                    let tape = self.policy.net.forward_tape(p.states)?;
                    let pg = ppo_gradient(
                        tape.output(),
                        &self.policy.log_std,
                        p.actions,
                        &logp_old,
                        &p.adv,
                        self.hp.clip_eps,
                        self.hp.entropy_coef,
                    );
                    let g = self.policy.net.backward(&tape, pg.mean.view(), BackwardOptions::default())?.params;
                    let (closs, _, cg) = self.critic_grads(p.states, &p.targets)?;
                    let Optim::Ppo { actor, log_std, critic } = &mut self.optim else { unreachable!() };
                    actor.step(self.policy.net.params_mut(), &g);
                    log_std.step(&mut self.policy.log_std, &pg.log_std);
                    critic.step(self.critic.as_mut().unwrap().params_mut(), &cg);
                    self.clamp_log_std();
                    losses.add_actor(pg.loss);
                    losses.add_critic(closs);
                }
            }
            Algorithm::Trpo => {
                let means_old = self.policy.net.forward(p.states)?;
                let ls_old = self.policy.log_std.clone();
                let logp_old = log_probs(&means_old, &ls_old, p.actions);
                for _ in 0..self.hp.epochs {
                    let actor_loss = self.trpo_step(&p, &means_old, &ls_old, &logp_old)?;
                    losses.add_actor(actor_loss);
                    let (closs, _, cg) = self.critic_grads(p.states, &p.targets)?;
                    let Optim::Trpo { critic } = &mut self.optim else { unreachable!() };
                    critic.step(self.critic.as_mut().unwrap().params_mut(), &cg);
                    losses.add_critic(closs);
                }
            }
            Algorithm::Acktr => {
                let tape = self.policy.net.forward_tape(p.states)?;
                let pg = policy_gradient(tape.output(), &self.policy.log_std, p.actions, &p.adv, self.hp.entropy_coef);
                let opts = BackwardOptions { input_grad: false, layer_deltas: !self.freeze_kfac };
                let g = self.policy.net.backward(&tape, pg.mean.view(), BackwardOptions::default())?.params;
                let fisher_dy = if self.freeze_kfac {
                    None
                } else {
                    let sd: Vec<f64> = self.policy.log_std.iter().map(|l| clamp_log_std(*l).exp()).collect();
                    Some(Array2::from_shape_fn((p.actions.len(), ACTION_DIM), |(_, k)| {
                        let e: f64 = StandardNormal.sample(rng);
                        (e / sd[k]) as f32
                    }))
                };
                let (closs, ctape, cg) = self.critic_grads(p.states, &p.targets)?;
                let critic_fisher = if self.freeze_kfac {
                    None
                } else {
                    Some(Array2::from_shape_fn((p.actions.len(), 1), |_| {
                        let e: f64 = StandardNormal.sample(rng);
                        e as f32
                    }))
                };
                let Optim::Acktr { actor, critic } = &mut self.optim else { unreachable!() };
                if let Some(dy) = fisher_dy {
                    let deltas = self.policy.net.backward(&tape, dy.view(), opts)?.deltas.unwrap();
                    actor.update_stats(&tape, &deltas);
                }
                if let Some(dy) = critic_fisher {
                    let c = self.critic.as_ref().unwrap();
                    let deltas = c.backward(&ctape, dy.view(), opts)?.deltas.unwrap();
                    critic.update_stats(&ctape, &deltas);
                }
                let a_step = actor.step(&mut self.policy.net, &g)?;
                for (l, d) in self.policy.log_std.iter_mut().zip(&pg.log_std) {
                    *l -= self.hp.lr * d;
                }
                let c_step = critic.step(self.critic.as_mut().unwrap(), &cg)?;
                self.last_kfac = Some((a_step, c_step));
                self.clamp_log_std();
                losses.add_actor(pg.loss);
                losses.add_critic(closs);
            }
            _ => unreachable!(),
        }
        Ok(losses)
    }

    /// Surrogate `mean(ρA) + c·H` and mean KL to the batch policy for the
    /// policy parameters packed in `theta`.
    fn trpo_eval(
        &self,
        scratch: &mut Mlp<f32>,
        theta: &[f64],
        p: &Prepared<'_>,
        means_old: &Array2<f32>,
        ls_old: &[f64],
        logp_old: &[f64],
    ) -> Result<(f64, f64)> {
        let n_net = scratch.params().len();
        for (dst, &src) in scratch.params_mut().iter_mut().zip(&theta[..n_net]) {
            *dst = src as f32;
        }
        let ls: Vec<f64> = theta[n_net..].iter().map(|&v| clamp_log_std(v) as f32 as f64).collect();
        let means = scratch.forward(p.states)?;
        let logp = log_probs(&means, &ls, p.actions);
        let n = logp.len() as f64;
        let mut surr = 0.0;
        let mut kl = 0.0;
        for i in 0..logp.len() {
            surr += (logp[i] - logp_old[i]).exp() * p.adv[i];
            kl += gaussian_kl(&mean_row(&means, i), &ls, &mean_row(means_old, i), ls_old);
        }
        Ok((surr / n + self.hp.entropy_coef * gaussian_entropy(&ls), kl / n))
    }

    fn trpo_step(
        &mut self,
        p: &Prepared<'_>,
        means_old: &Array2<f32>,
        ls_old: &[f64],
        logp_old: &[f64],
    ) -> Result<f64> {
        let net = &self.policy.net;
        let tape = net.forward_tape(p.states)?;
        let means = tape.output();
        let logp = log_probs(means, &self.policy.log_std, p.actions);
        let n = logp.len() as f64;
        let ratio: Vec<f64> = logp.iter().zip(logp_old).map(|(l, o)| (l - o).exp()).collect();
        let dlogp: Vec<f64> = ratio.iter().zip(&p.adv).map(|(r, a)| r * a / n).collect();
        let (dmean, mut dls) = log_prob_chain(means, &self.policy.log_std, p.actions, &dlogp);
        for d in &mut dls {
            *d += self.hp.entropy_coef;
        }
        let mut g = net.backward(&tape, dmean.view(), BackwardOptions::default())?.params;
        g.extend_from_slice(&dls);

        let log_std = self.policy.log_std.clone();
        let damping = self.hp.cg_damping;
        let mut fvp_err = None;
        let x = conjugate_gradient(
            |v| match fisher_vector_product(net, &tape, &log_std, v, damping) {
                Ok(r) => r,
                Err(e) => {
                    fvp_err = Some(e);
                    vec![0.0; v.len()]
                }
            },
            &g,
            self.hp.cg_iters,
            1e-10,
        );
        if let Some(e) = fvp_err {
            return Err(e);
        }
        let fx = fisher_vector_product(net, &tape, &log_std, &x, damping)?;
        let scale = trust_region_scale(&x, &fx, self.hp.delta);
        let step: Vec<f64> = x.iter().map(|v| v * scale).collect();

        let mut theta0: Vec<f64> = net.params().iter().map(|&v| v as f64).collect();
        theta0.extend_from_slice(&log_std);
        let mut scratch = net.clone();
        let (f0, _) = self.trpo_eval(&mut scratch, &theta0, p, means_old, ls_old, logp_old)?;
        let mut eval_err = None;
        let (accepted, info) = line_search(
            &theta0,
            &step,
            f0,
            |theta| match self.trpo_eval(&mut scratch, theta, p, means_old, ls_old, logp_old) {
                Ok(v) => v,
                Err(e) => {
                    eval_err = Some(e);
                    (f64::NEG_INFINITY, f64::INFINITY)
                }
            },
            self.hp.delta,
            self.hp.backtracks,
            self.hp.backtrack_coef,
        );
        if let Some(e) = eval_err {
            return Err(e);
        }
        self.last_line_search = Some(info);
        let mut loss = -f0;
        if let Some(theta) = accepted {
            let n_net = self.policy.net.params().len();
            for (dst, &src) in self.policy.net.params_mut().iter_mut().zip(&theta[..n_net]) {
                *dst = src as f32;
            }
            self.policy.log_std = theta[n_net..].to_vec();
            self.clamp_log_std();
            loss = -(f0 + info.improvement);
        }
        Ok(loss)
    }
}

impl Agent for OnPolicyAgent {
    fn algorithm(&self) -> Algorithm {
        self.algo
    }

    fn hyperparams(&self) -> &AgentHyperparams {
        &self.hp
    }

    fn policy(&self) -> &Policy {
        &self.policy
    }

    fn observe(&mut self, batch: &TransitionBatch, _rng: &mut Rng) -> Result<Losses> {
        self.buffer.push(batch);
        Ok(Losses::default())
    }

    fn end_episode(&mut self, rng: &mut Rng) -> Result<Losses> {
        let batch = self.buffer.take();
        self.update(&batch, rng)
    }

    fn checkpoint(&self, meta: serde_json::Value) -> Checkpoint {
        let meta = checkpoint_meta(self.algo, &self.hp, self.policy.state_dim(), meta);
        let mut ck = self.policy.to_checkpoint(meta);
        if let Some(c) = &self.critic {
            ck = ck.with_net("critic", c);
        }
        ck
    }

    fn is_finite(&self) -> bool {
        self.policy.is_finite() && self.critic.as_ref().is_none_or(|c| c.is_finite())
    }
}
