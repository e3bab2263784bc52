use crate::agents::hyper::{AgentHyperparams, Algorithm};
use crate::agents::offpolicy::OffPolicyAgent;
use crate::agents::onpolicy::OnPolicyAgent;
use crate::agents::policy::Policy;
use crate::env::TransitionBatch;
use crate::nn::Checkpoint;
use crate::rng::Rng;
use crate::Result;

/// Running means of the losses reported by updates.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Losses {
    actor_sum: f64,
    actor_n: usize,
    critic_sum: f64,
    critic_n: usize,
}

impl Losses {
    pub fn add_actor(&mut self, v: f64) {
        self.actor_sum += v;
        self.actor_n += 1;
    }

    pub fn add_critic(&mut self, v: f64) {
        self.critic_sum += v;
        self.critic_n += 1;
    }

    pub fn merge(&mut self, other: &Losses) {
        self.actor_sum += other.actor_sum;
        self.actor_n += other.actor_n;
        self.critic_sum += other.critic_sum;
        self.critic_n += other.critic_n;
    }

    pub fn actor(&self) -> Option<f64> {
        (self.actor_n > 0).then(|| self.actor_sum / self.actor_n as f64)
    }

    pub fn critic(&self) -> Option<f64> {
        (self.critic_n > 0).then(|| self.critic_sum / self.critic_n as f64)
    }
}

/// A learning algorithm with its networks, optimisers and buffers.
pub trait Agent: Send + Sync {
    fn algorithm(&self) -> Algorithm;

    fn hyperparams(&self) -> &AgentHyperparams;

    /// The current actor, used for both exploration and evaluation.
    fn policy(&self) -> &Policy;

    /// Receives the transitions of one batched environment step.
    fn observe(&mut self, batch: &TransitionBatch, rng: &mut Rng) -> Result<Losses>;

    /// Called once the episode is over.
    fn end_episode(&mut self, rng: &mut Rng) -> Result<Losses>;

    /// Actor and critics; optimiser state is not saved.
    fn checkpoint(&self, meta: serde_json::Value) -> Checkpoint;

    fn is_finite(&self) -> bool;
}

pub fn build_agent(
    algo: Algorithm,
    hp: &AgentHyperparams,
    state_dim: usize,
    rng: &mut Rng,
) -> Result<Box<dyn Agent>> {
    hp.validate()?;
    Ok(if algo.is_on_policy() {
        Box::new(OnPolicyAgent::new(algo, hp.clone(), state_dim, rng)?)
    } else {
        Box::new(OffPolicyAgent::new(algo, hp.clone(), state_dim, rng)?)
    })
}

/// Common checkpoint metadata.
pub(crate) fn checkpoint_meta(
    algo: Algorithm,
    hp: &AgentHyperparams,
    state_dim: usize,
    extra: serde_json::Value,
) -> serde_json::Value {
    let mut meta = serde_json::json!({
        "algorithm": algo.name(),
        "state_dim": state_dim,
        "hyperparams": hp,
    });
    if let serde_json::Value::Object(m) = extra {
        for (k, v) in m {
            meta[k] = v;
        }
    }
    meta
}
