//! The tracking MDP.
//!
//! A streamline starts at a seed, and at every step the agent's action is
//! normalised to a step of fixed length. With WM seeding an episode first
//! tracks forward from every seed, then flips each half-streamline and either
//! replays it (retracking) before continuing past the seed, or starts
//! directly from the seed. Interface seeding tracks a single half.

mod baseline;
mod config;
mod episode;
pub mod io;
mod seeding;
mod streamline;
mod subject;
mod tracker;

pub use baseline::{baseline_track, replay_asr, PeakFollower};
pub use config::{MaskSampling, Noise, RewardConfig, Seeding, SignalKind, TrackingConfig};
pub use episode::{rollout_episode, Actor, Episode, EpisodeStats, Observation, Rollout, NO_RETRACK_HISTORY};
pub use seeding::{sample_seeds, seed_batch, seed_mask, seed_points};
pub use streamline::{Phase, Status, Streamline, StreamlineBatch, TransitionBatch};
pub use subject::Subject;
pub use tracker::{
    reward_step, scale_action, TerminationReason, TrackingEnv, MIN_ACTION_NORM, N_STATE_POSITIONS,
};
