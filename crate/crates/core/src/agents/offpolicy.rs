//! DDPG, TD3, SAC and SAC with automatic entropy tuning.

use ndarray::{Array2, ArrayView2};
use rand_distr::{Distribution, Normal, StandardNormal};

use crate::agents::agent::{checkpoint_meta, Agent, Losses};
use crate::agents::buffers::{ReplayBuffer, ReplaySample};
use crate::agents::hyper::{AgentHyperparams, Algorithm};
use crate::agents::policy::{column, layer_sizes, mse_grad, state_action, Policy, PolicyHead, ACTION_DIM};
use crate::env::TransitionBatch;
use crate::nn::dist::{squashed_backward, squashed_sample, SquashedSample};
use crate::nn::{Adam, BackwardOptions, Checkpoint, Mlp};
use crate::rng::Rng;
use crate::{Error, Result};

/// Bootstrapped critic targets of a sampled batch.
#[derive(Debug, Clone, PartialEq)]
pub struct Targets {
    pub y: Vec<f64>,
    /// Each target critic's value at `(s′, a′)`.
    pub q_next: Vec<Vec<f64>>,
    /// `log π(a′|s′)` for the stochastic actor.
    pub log_prob_next: Option<Vec<f64>>,
}

pub struct OffPolicyAgent {
    algo: Algorithm,
    hp: AgentHyperparams,
    state_dim: usize,
    actor: Policy,
    actor_target: Option<Mlp<f32>>,
    critics: Vec<Mlp<f32>>,
    critic_targets: Vec<Mlp<f32>>,
    actor_opt: Adam,
    critic_opts: Vec<Adam>,
    log_alpha: f64,
    alpha_opt: Option<Adam>,
    replay: ReplayBuffer,
    env_steps: u64,
    critic_updates: u64,
}

fn view(data: &[f32], n: usize, d: usize) -> Result<ArrayView2<'_, f32>> {
    ArrayView2::from_shape((n, d), data).map_err(|e| Error::ShapeMismatch(e.to_string()))
}

fn tanh_rows(out: &Array2<f32>) -> Vec<[f32; 3]> {
    out.rows().into_iter().map(|r| [r[0].tanh(), r[1].tanh(), r[2].tanh()]).collect()
}

fn squashed_rows(out: &Array2<f32>, eps: &[[f64; 3]]) -> Vec<SquashedSample> {
    out.rows()
        .into_iter()
        .zip(eps)
        .map(|(r, e)| {
            let mean = [r[0] as f64, r[1] as f64, r[2] as f64];
            let ls = [r[3] as f64, r[4] as f64, r[5] as f64];
            squashed_sample(&mean, &ls, e)
        })
        .collect()
}

fn normal3(rng: &mut Rng) -> [f64; 3] {
    std::array::from_fn(|_| StandardNormal.sample(rng))
}

impl OffPolicyAgent {
    pub fn new(algo: Algorithm, hp: AgentHyperparams, state_dim: usize, rng: &mut Rng) -> Result<Self> {
        if algo.is_on_policy() {
            return Err(Error::InvalidConfig(format!("{algo} is not an off-policy algorithm")));
        }
        hp.validate()?;
        let head = if matches!(algo, Algorithm::Sac | Algorithm::SacAuto) {
            PolicyHead::Squashed
        } else {
            PolicyHead::Deterministic
        };
        let actor = Policy::new(head, state_dim, &hp.hidden, hp.activation, hp.init_log_std, rng)?;
        let n_critics = if algo == Algorithm::Ddpg { 1 } else { 2 };
        let critics = (0..n_critics)
            .map(|_| Mlp::new(&layer_sizes(state_dim + ACTION_DIM, &hp.hidden, 1), hp.activation, rng))
            .collect::<Result<Vec<_>>>()?;
        let actor_target = (head == PolicyHead::Deterministic).then(|| actor.net.clone());
        let alpha_opt = (algo == Algorithm::SacAuto).then(|| Adam::new(1, hp.lr));
        Ok(Self {
            algo,
            state_dim,
            actor_opt: Adam::new(actor.net.params().len(), hp.lr),
            critic_opts: critics.iter().map(|c| Adam::new(c.params().len(), hp.lr)).collect(),
            critic_targets: critics.clone(),
            critics,
            actor,
            actor_target,
            log_alpha: hp.alpha.max(f64::MIN_POSITIVE).ln(),
            alpha_opt,
            replay: ReplayBuffer::new(state_dim, hp.replay_capacity),
            env_steps: 0,
            critic_updates: 0,
            hp,
        })
    }

    /// Current entropy weight.
    pub fn alpha(&self) -> f64 {
        match self.algo {
            Algorithm::SacAuto => self.log_alpha.exp(),
            Algorithm::Sac => self.hp.alpha,
            _ => 0.0,
        }
    }

    pub fn critics(&self) -> &[Mlp<f32>] {
        &self.critics
    }

    pub fn critics_mut(&mut self) -> &mut [Mlp<f32>] {
        &mut self.critics
    }

    pub fn critic_targets(&self) -> &[Mlp<f32>] {
        &self.critic_targets
    }

    pub fn critic_targets_mut(&mut self) -> &mut [Mlp<f32>] {
        &mut self.critic_targets
    }

    pub fn actor_target(&self) -> Option<&Mlp<f32>> {
        self.actor_target.as_ref()
    }

    pub fn policy_mut(&mut self) -> &mut Policy {
        &mut self.actor
    }

    pub fn replay(&self) -> &ReplayBuffer {
        &self.replay
    }

    /// Number of critic updates performed so far.
    pub fn critic_updates(&self) -> u64 {
        self.critic_updates
    }

    pub fn q_values(&self, critic: usize, states: ArrayView2<'_, f32>, actions: &[[f32; 3]]) -> Result<Vec<f64>> {
        let x = state_action(states, actions);
        Ok(column(&self.critics[critic].forward(x.view())?, 0))
    }

    pub fn target_values(&self, s: &ReplaySample, rng: &mut Rng) -> Result<Targets> {
        let n = s.len();
        let next = view(&s.next_states, n, self.state_dim)?;
        let (a_next, log_prob_next) = match self.algo {
            Algorithm::Ddpg | Algorithm::Td3 => {
                let mut a = tanh_rows(&self.actor_target.as_ref().unwrap().forward(next)?);
                if self.algo == Algorithm::Td3 && self.hp.target_noise > 0.0 {
                    let noise = Normal::new(0.0, self.hp.target_noise).expect("finite noise scale");
                    let c = self.hp.target_noise_clip;
                    for row in &mut a {
                        for v in row.iter_mut() {
                            let e: f64 = noise.sample(rng);
                            *v = (*v as f64 + e.clamp(-c, c)).clamp(-1.0, 1.0) as f32;
                        }
                    }
                }
                (a, None)
            }
            _ => {
                let out = self.actor.net.forward(next)?;
                let eps: Vec<[f64; 3]> = (0..n).map(|_| normal3(rng)).collect();
                let smp = squashed_rows(&out, &eps);
                let a = smp.iter().map(|x| [x.action[0] as f32, x.action[1] as f32, x.action[2] as f32]).collect();
                (a, Some(smp.iter().map(|x| x.log_prob).collect::<Vec<_>>()))
            }
        };
        let x = state_action(next, &a_next);
        let q_next = self
            .critic_targets
            .iter()
            .map(|c| Ok(column(&c.forward(x.view())?, 0)))
            .collect::<Result<Vec<_>>>()?;
        let alpha = self.alpha();
        let y = (0..n)
            .map(|i| {
                let qmin = q_next.iter().map(|q| q[i]).fold(f64::INFINITY, f64::min);
                let soft = match &log_prob_next {
                    Some(lp) => qmin - alpha * lp[i],
                    None => qmin,
                };
                let cont = if s.terminal[i] { 0.0 } else { 1.0 };
                s.rewards[i] + self.hp.gamma * cont * soft
            })
            .collect();
        Ok(Targets { y, q_next, log_prob_next })
    }

    /// One gradient update of the critics and, when due, the actor.
    pub fn update(&mut self, s: &ReplaySample, rng: &mut Rng) -> Result<Losses> {
        let mut losses = Losses::default();
        if s.is_empty() {
            return Ok(losses);
        }
        let targets = self.target_values(s, rng)?;
        let states = view(&s.states, s.len(), self.state_dim)?;
        let x = state_action(states, &s.actions);
        let mut closs = 0.0;
        let n_critics = self.critics.len() as f64;
        for (c, opt) in self.critics.iter_mut().zip(&mut self.critic_opts) {
            let tape = c.forward_tape(x.view())?;
            let (loss, dy) = mse_grad(tape.output(), &targets.y);
            let g = c.backward(&tape, dy.view(), BackwardOptions::default())?.params;
            opt.step(c.params_mut(), &g);
            closs += loss / n_critics;
        }
        losses.add_critic(closs);
        self.critic_updates += 1;

        let actor_due = self.algo != Algorithm::Td3 || self.critic_updates.is_multiple_of(self.hp.policy_delay as u64);
        if actor_due {
            let loss = match self.algo {
                Algorithm::Ddpg | Algorithm::Td3 => self.deterministic_actor_step(states)?,
                _ => self.soft_actor_step(states, rng)?,
            };
            losses.add_actor(loss);
        }
        let tau = self.hp.tau;
        if self.algo != Algorithm::Td3 || actor_due {
            for (t, c) in self.critic_targets.iter_mut().zip(&self.critics) {
                t.polyak_from(c, tau);
            }
            if let Some(t) = &mut self.actor_target {
                t.polyak_from(&self.actor.net, tau);
            }
        }
        Ok(losses)
    }

    /// Gradient of `−mean Q(s, a)` with respect to `a`, taking per row the
    /// critic selected by `pick`.
    fn q_action_grad(
        &self,
        states: ArrayView2<'_, f32>,
        actions: &[[f32; 3]],
        min_of_twins: bool,
    ) -> Result<(Vec<f64>, Vec<[f64; 3]>)> {
        let n = actions.len();
        let x = state_action(states, actions);
        let used = if min_of_twins { self.critics.len() } else { 1 };
        let tapes = self.critics[..used].iter().map(|c| c.forward_tape(x.view())).collect::<Result<Vec<_>>>()?;
        let qs: Vec<Vec<f64>> = tapes.iter().map(|t| column(t.output(), 0)).collect();
        let pick: Vec<usize> = (0..n)
            .map(|i| (1..used).fold(0, |best, j| if qs[j][i] < qs[best][i] { j } else { best }))
            .collect();
        let qmin: Vec<f64> = (0..n).map(|i| qs[pick[i]][i]).collect();
        let mut da = vec![[0.0f64; 3]; n];
        let opts = BackwardOptions { input_grad: true, layer_deltas: false };
        for (j, tape) in tapes.iter().enumerate() {
            let dy = Array2::from_shape_fn((n, 1), |(i, _)| if pick[i] == j { -1.0 / n as f32 } else { 0.0 });
            if dy.iter().all(|&v| v == 0.0) {
                continue;
            }
            let gin = self.critics[j].backward(tape, dy.view(), opts)?.input.unwrap();
            for i in 0..n {
                for k in 0..ACTION_DIM {
                    da[i][k] += gin[[i, self.state_dim + k]] as f64;
                }
            }
        }
        Ok((qmin, da))
    }

    fn deterministic_actor_step(&mut self, states: ArrayView2<'_, f32>) -> Result<f64> {
        let tape = self.actor.net.forward_tape(states)?;
        let a = tanh_rows(tape.output());
        let (q, da) = self.q_action_grad(states, &a, false)?;
        let dout = Array2::from_shape_fn((a.len(), ACTION_DIM), |(i, k)| {
            let ak = a[i][k] as f64;
            (da[i][k] * (1.0 - ak * ak)) as f32
        });
        let g = self.actor.net.backward(&tape, dout.view(), BackwardOptions::default())?.params;
        self.actor_opt.step(self.actor.net.params_mut(), &g);
        Ok(-q.iter().sum::<f64>() / q.len() as f64)
    }

    fn soft_actor_step(&mut self, states: ArrayView2<'_, f32>, rng: &mut Rng) -> Result<f64> {
        let n = states.nrows();
        let tape = self.actor.net.forward_tape(states)?;
        let out = tape.output();
        let eps: Vec<[f64; 3]> = (0..n).map(|_| normal3(rng)).collect();
        let smp = squashed_rows(out, &eps);
        let a: Vec<[f32; 3]> =
            smp.iter().map(|x| [x.action[0] as f32, x.action[1] as f32, x.action[2] as f32]).collect();
        let (qmin, da) = self.q_action_grad(states, &a, true)?;
        let alpha = self.alpha();
        let mut dout = Array2::zeros((n, 2 * ACTION_DIM));
        let mut loss = 0.0;
        for i in 0..n {
            let r = out.row(i);
            let mean = [r[0] as f64, r[1] as f64, r[2] as f64];
            let ls = [r[3] as f64, r[4] as f64, r[5] as f64];
            let (dm, ds) = squashed_backward(&mean, &ls, &smp[i], alpha / n as f64, &da[i]);
            for k in 0..ACTION_DIM {
                dout[[i, k]] = dm[k] as f32;
                dout[[i, ACTION_DIM + k]] = ds[k] as f32;
            }
            loss += (alpha * smp[i].log_prob - qmin[i]) / n as f64;
        }
        let g = self.actor.net.backward(&tape, dout.view(), BackwardOptions::default())?.params;
        self.actor_opt.step(self.actor.net.params_mut(), &g);
        if let Some(opt) = &mut self.alpha_opt {
            let mean_lp = smp.iter().map(|x| x.log_prob).sum::<f64>() / n as f64;
            let grad = -(mean_lp + self.hp.target_entropy);
            let mut la = [self.log_alpha];
            opt.step(&mut la, &[grad]);
            self.log_alpha = la[0];
        }
        Ok(loss)
    }

    /// Entropy-weight update alone, for a batch of log-densities.
    pub fn alpha_step(&mut self, log_probs: &[f64]) {
        if let Some(opt) = &mut self.alpha_opt {
            let mean_lp = log_probs.iter().sum::<f64>() / log_probs.len().max(1) as f64;
            let mut la = [self.log_alpha];
            opt.step(&mut la, &[-(mean_lp + self.hp.target_entropy)]);
            self.log_alpha = la[0];
        }
    }
}

impl Agent for OffPolicyAgent {
    fn algorithm(&self) -> Algorithm {
        self.algo
    }

    fn hyperparams(&self) -> &AgentHyperparams {
        &self.hp
    }

    fn policy(&self) -> &Policy {
        &self.actor
    }

    fn observe(&mut self, batch: &TransitionBatch, rng: &mut Rng) -> Result<Losses> {
        let mut losses = Losses::default();
        if batch.is_empty() {
            return Ok(losses);
        }
        self.replay.push_batch(batch);
        self.env_steps += 1;
        let ready = self.replay.len() >= self.hp.learning_starts.max(1);
        if ready && self.env_steps.is_multiple_of(self.hp.update_every as u64) {
            for _ in 0..self.hp.updates_per_round {
                let s = self.replay.sample(self.hp.batch_size, rng);
                losses.merge(&self.update(&s, rng)?);
            }
        }
        Ok(losses)
    }

    fn end_episode(&mut self, _rng: &mut Rng) -> Result<Losses> {
        Ok(Losses::default())
    }

    fn checkpoint(&self, meta: serde_json::Value) -> Checkpoint {
        let mut meta = checkpoint_meta(self.algo, &self.hp, self.state_dim, meta);
        meta["alpha"] = serde_json::json!(self.alpha());
        let mut ck = self.actor.to_checkpoint(meta);
        for (i, c) in self.critics.iter().enumerate() {
            ck = ck.with_net(&format!("critic{i}"), c);
        }
        ck
    }

    fn is_finite(&self) -> bool {
        self.actor.is_finite()
            && self.critics.iter().all(|c| c.is_finite())
            && self.critic_targets.iter().all(|c| c.is_finite())
            && self.actor_target.as_ref().is_none_or(|t| t.is_finite())
            && self.log_alpha.is_finite()
    }
}
