//! A five-state chain used to check that every algorithm can learn.
//!
//! States are one-hot vectors. In state `k` the right move is `a[0] > 0`
//! for even `k` and `a[0] < 0` for odd `k`; it pays +1 and advances the
//! chain, a wrong move pays −1 and stays. Episodes last five steps, so the
//! optimal return is 5.

use ndarray::Array2;
use rand_distr::{Distribution, Normal};

use crate::agents::agent::{Agent, Losses};
use crate::agents::policy::{Policy, PolicyHead};
use crate::env::TransitionBatch;
use crate::rng::{substream, Rng};
use crate::{Error, Result};

pub const TOY_STATES: usize = 5;
pub const TOY_HORIZON: usize = 5;
pub const TOY_OPTIMUM: f64 = TOY_HORIZON as f64;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ToyMdp {
    /// Episodes run side by side per training iteration.
    pub n_envs: usize,
    /// Gaussian noise added to deterministic actors while exploring.
    pub action_noise: f64,
}

impl Default for ToyMdp {
    fn default() -> Self {
        Self { n_envs: 16, action_noise: 0.3 }
    }
}

pub fn is_correct(state: usize, a0: f64) -> bool {
    if state.is_multiple_of(2) {
        a0 > 0.0
    } else {
        a0 < 0.0
    }
}

fn one_hot(states: &[usize]) -> Array2<f32> {
    Array2::from_shape_fn((states.len(), TOY_STATES), |(i, k)| if states[i] == k { 1.0 } else { 0.0 })
}

impl ToyMdp {
    /// Return of the greedy policy from the start state.
    pub fn greedy_return(&self, policy: &Policy) -> Result<f64> {
        let mut s = 0usize;
        let mut ret = 0.0;
        for _ in 0..TOY_HORIZON {
            let a = policy.greedy(one_hot(&[s]).view())?[0];
            if is_correct(s, a[0]) {
                ret += 1.0;
                s = (s + 1).min(TOY_STATES - 1);
            } else {
                ret -= 1.0;
            }
        }
        Ok(ret)
    }

    /// Runs `n_envs` exploratory episodes, feeding every step to the agent,
    /// and returns their mean return.
    pub fn train_iteration(&self, agent: &mut dyn Agent, seed: u64, iteration: u64, update_rng: &mut Rng) -> Result<(f64, Losses)> {
        let n = self.n_envs;
        let mut states = vec![0usize; n];
        let mut total = 0.0;
        let mut losses = Losses::default();
        let noise = Normal::new(0.0, self.action_noise).map_err(|e| Error::InvalidConfig(e.to_string()))?;
        for t in 0..TOY_HORIZON {
            let x = one_hot(&states);
            let mut rngs: Vec<Rng> = (0..n).map(|i| substream(seed, &[iteration, t as u64, i as u64])).collect();
            let policy = agent.policy();
            let mut actions = policy.sample(x.view(), &mut rngs)?;
            if policy.head == PolicyHead::Deterministic {
                for (a, rng) in actions.iter_mut().zip(&mut rngs) {
                    for v in a.iter_mut() {
                        *v += noise.sample(rng);
                    }
                }
            }
            let mut batch = TransitionBatch::new(TOY_STATES);
            let next: Vec<usize> = states
                .iter()
                .zip(&actions)
                .map(|(&s, a)| if is_correct(s, a[0]) { (s + 1).min(TOY_STATES - 1) } else { s })
                .collect();
            let xn = one_hot(&next);
            let done = t + 1 == TOY_HORIZON;
            for i in 0..n {
                let r = if is_correct(states[i], actions[i][0]) { 1.0 } else { -1.0 };
                total += r;
                let a = [actions[i][0] as f32, actions[i][1] as f32, actions[i][2] as f32];
                batch.push(
                    x.row(i).as_slice().unwrap(),
                    a,
                    r,
                    xn.row(i).as_slice().unwrap(),
                    done,
                    false,
                    2 * i as u32,
                );
            }
            losses.merge(&agent.observe(&batch, update_rng)?);
            states = next;
        }
        losses.merge(&agent.end_episode(update_rng)?);
        Ok((total / n as f64, losses))
    }

    /// Trains for `iterations` and returns the greedy return after each one.
    pub fn train(&self, agent: &mut dyn Agent, iterations: usize, seed: u64) -> Result<Vec<f64>> {
        let mut update_rng = substream(seed, &[u64::MAX]);
        let mut curve = Vec::with_capacity(iterations);
        for it in 0..iterations {
            self.train_iteration(agent, seed, it as u64, &mut update_rng)?;
            if !agent.is_finite() {
                return Err(Error::NonFinite(format!("toy iteration {it}")));
            }
            curve.push(self.greedy_return(agent.policy())?);
        }
        Ok(curve)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn correct_moves_alternate() {
        assert!(is_correct(0, 0.5) && !is_correct(0, -0.5));
        assert!(is_correct(1, -0.5) && !is_correct(1, 0.5));
        assert!(!is_correct(2, 0.0));
    }
}
