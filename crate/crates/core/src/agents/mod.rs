//! Learning algorithms and their shared machinery.
//!
//! Every algorithm implements [`Agent`]: it receives the transitions of each
//! batched environment step through [`Agent::observe`] and is told when an
//! episode ends. On-policy methods buffer the whole episode and update once
//! at its end; off-policy methods store transitions in a replay buffer and
//! learn every `update_every` environment steps.

mod agent;
pub mod buffers;
pub mod hyper;
pub mod offpolicy;
pub mod onpolicy;
pub mod policy;
pub mod returns;
pub mod sweep;
pub mod toy;
pub mod train;

pub use agent::{build_agent, Agent, Losses};
pub use buffers::{ReplayBuffer, ReplaySample, RolloutBuffer};
pub use hyper::{expand_grid, default_grid, AgentHyperparams, Algorithm, GridAxis};
pub use offpolicy::{OffPolicyAgent, Targets};
pub use onpolicy::OnPolicyAgent;
pub use policy::{Policy, PolicyHead, Sampling, ACTION_DIM};
pub use sweep::{grid_sweep, select_best, SweepEntry, SweepResult};
pub use toy::ToyMdp;
pub use train::{train, training_env, write_progress_csv, ProgressRow, TrainConfig, Trainer};
