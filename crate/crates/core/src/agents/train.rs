use std::io::Write;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::agents::agent::{build_agent, Agent, Losses};
use crate::agents::hyper::{AgentHyperparams, Algorithm};
use crate::agents::policy::Sampling;
use crate::env::{sample_seeds, seed_batch, Episode, Noise, TrackingEnv};
use crate::rng::{derive_seed, substream};
use crate::{Error, Result};

const STREAM_INIT: u64 = 0;
const STREAM_POOL: u64 = 1;
const STREAM_SEEDS: u64 = 2;
const STREAM_EPISODE: u64 = 3;
const STREAM_UPDATE: u64 = 4;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainConfig {
    pub episodes: usize,
    /// Streamlines tracked per episode.
    pub n_seeds: usize,
    /// Checkpoint period in episodes; 0 keeps only the final one.
    pub checkpoint_every: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self { episodes: 1000, n_seeds: 4096, checkpoint_every: 0 }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.episodes == 0 || self.n_seeds == 0 {
            return Err(Error::InvalidConfig("episodes and n_seeds must be > 0".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProgressRow {
    pub episode: usize,
    /// Mean summed reward per streamline.
    pub asr: f64,
    pub actor_loss: Option<f64>,
    pub critic_loss: Option<f64>,
    pub transitions: usize,
    /// Seconds since training started.
    pub wall_time: f64,
}

/// The environment used while training: deterministic actors explore
/// through FA-scaled action noise of scale `sigma`, every other algorithm
/// tracks without it.
pub fn training_env(env: &TrackingEnv, algo: Algorithm, hp: &AgentHyperparams) -> Result<TrackingEnv> {
    let mut cfg = env.config().clone();
    cfg.noise = if algo.uses_action_noise() { Noise::FaScaled { sigma0: hp.sigma } } else { Noise::None };
    env.with_config(cfg, *env.reward_config())
}

pub struct Trainer {
    env: TrackingEnv,
    agent: Box<dyn Agent>,
    cfg: TrainConfig,
    seed: u64,
    pool: Vec<crate::Vec3>,
    episode: usize,
    started: Instant,
}

impl Trainer {
    pub fn new(env: &TrackingEnv, algo: Algorithm, hp: &AgentHyperparams, cfg: TrainConfig, seed: u64) -> Result<Self> {
        cfg.validate()?;
        let env = training_env(env, algo, hp)?;
        let agent = build_agent(algo, hp, env.state_dim(), &mut substream(seed, &[STREAM_INIT]))?;
        let pool = seed_batch(env.subject(), env.config(), &mut substream(seed, &[STREAM_POOL]))?;
        Ok(Self { env, agent, cfg, seed, pool, episode: 0, started: Instant::now() })
    }

    pub fn agent(&self) -> &dyn Agent {
        self.agent.as_ref()
    }

    pub fn into_agent(self) -> Box<dyn Agent> {
        self.agent
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn episodes_done(&self) -> usize {
        self.episode
    }

    pub fn is_done(&self) -> bool {
        self.episode >= self.cfg.episodes
    }

    /// Whether a checkpoint is due after the episode just finished.
    pub fn checkpoint_due(&self) -> bool {
        self.is_done() || (self.cfg.checkpoint_every > 0 && self.episode.is_multiple_of(self.cfg.checkpoint_every))
    }

    /// Tracks one episode with exploration and runs the algorithm's updates.
    pub fn run_episode(&mut self) -> Result<ProgressRow> {
        let ep = self.episode as u64;
        let seeds = sample_seeds(&self.pool, self.cfg.n_seeds, &mut substream(self.seed, &[STREAM_SEEDS, ep]));
        let mut update_rng = substream(self.seed, &[STREAM_UPDATE, ep]);
        let mut episode = Episode::new(&self.env, &seeds, derive_seed(self.seed, &[STREAM_EPISODE, ep]));
        let mut losses = Losses::default();
        let mut reward_sum = 0.0;
        let mut transitions = 0;
        while !episode.is_finished() {
            let batch = episode.step(&Sampling(self.agent.policy()));
            reward_sum += batch.rewards.iter().sum::<f64>();
            transitions += batch.len();
            losses.merge(&self.agent.observe(&batch, &mut update_rng)?);
        }
        losses.merge(&self.agent.end_episode(&mut update_rng)?);
        if !self.agent.is_finite() {
            return Err(Error::NonFinite(format!("parameters after episode {ep}")));
        }
        self.episode += 1;
        Ok(ProgressRow {
            episode: self.episode,
            asr: reward_sum / seeds.len().max(1) as f64,
            actor_loss: losses.actor(),
            critic_loss: losses.critic(),
            transitions,
            wall_time: self.started.elapsed().as_secs_f64(),
        })
    }
}

/// Trains for the configured number of episodes, calling `on_episode`
/// after each one.
pub fn train(
    env: &TrackingEnv,
    algo: Algorithm,
    hp: &AgentHyperparams,
    cfg: TrainConfig,
    seed: u64,
    mut on_episode: impl FnMut(&ProgressRow, &Trainer) -> Result<()>,
) -> Result<(Box<dyn Agent>, Vec<ProgressRow>)> {
    let mut trainer = Trainer::new(env, algo, hp, cfg, seed)?;
    let mut rows = Vec::new();
    while !trainer.is_done() {
        let row = trainer.run_episode()?;
        on_episode(&row, &trainer)?;
        rows.push(row);
    }
    Ok((trainer.into_agent(), rows))
}

pub const PROGRESS_HEADER: &str = "episode,asr,actor_loss,critic_loss,transitions,wall_time";

fn opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:e}")).unwrap_or_default()
}

pub fn write_progress_row<W: Write>(mut w: W, row: &ProgressRow) -> std::io::Result<()> {
    writeln!(
        w,
        "{},{:e},{},{},{},{:.3}",
        row.episode,
        row.asr,
        opt(row.actor_loss),
        opt(row.critic_loss),
        row.transitions,
        row.wall_time
    )
}

pub fn write_progress_csv<W: Write>(mut w: W, rows: &[ProgressRow]) -> std::io::Result<()> {
    writeln!(w, "{PROGRESS_HEADER}")?;
    for r in rows {
        write_progress_row(&mut w, r)?;
    }
    Ok(())
}
