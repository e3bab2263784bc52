use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::nn::Activation;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    /// REINFORCE.
    Vpg,
    A2c,
    Trpo,
    Acktr,
    Ppo,
    Ddpg,
    Td3,
    Sac,
    SacAuto,
}

impl Algorithm {
    pub const ALL: [Algorithm; 9] = [
        Self::Vpg,
        Self::A2c,
        Self::Trpo,
        Self::Acktr,
        Self::Ppo,
        Self::Ddpg,
        Self::Td3,
        Self::Sac,
        Self::SacAuto,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::Vpg => "vpg",
            Self::A2c => "a2c",
            Self::Trpo => "trpo",
            Self::Acktr => "acktr",
            Self::Ppo => "ppo",
            Self::Ddpg => "ddpg",
            Self::Td3 => "td3",
            Self::Sac => "sac",
            Self::SacAuto => "sac_auto",
        }
    }

    pub fn is_on_policy(self) -> bool {
        matches!(self, Self::Vpg | Self::A2c | Self::Trpo | Self::Acktr | Self::Ppo)
    }

    /// Deterministic actors explore through FA-scaled environment noise.
    pub fn uses_action_noise(self) -> bool {
        matches!(self, Self::Ddpg | Self::Td3)
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let norm = s.to_ascii_lowercase().replace('-', "_");
        let alias = match norm.as_str() {
            "reinforce" => "vpg",
            "sacauto" => "sac_auto",
            other => other,
        };
        Self::ALL
            .into_iter()
            .find(|a| a.name() == alias)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown algorithm {s:?}")))
    }
}

/// Every knob of every algorithm. Fields an algorithm does not use are
/// ignored by it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AgentHyperparams {
    pub lr: f64,
    pub gamma: f64,
    pub lambda: f64,
    pub entropy_coef: f64,
    /// PPO clipping parameter.
    pub clip_eps: f64,
    /// TRPO/ACKTR trust-region bound.
    pub delta: f64,
    /// DDPG/TD3 action noise scale.
    pub sigma: f64,
    /// SAC entropy weight (initial value for SAC-Auto).
    pub alpha: f64,
    /// TRPO iterations / PPO epochs per batch.
    pub epochs: usize,
    pub backtracks: usize,
    pub backtrack_coef: f64,
    pub cg_iters: usize,
    pub cg_damping: f64,
    pub hidden: Vec<usize>,
    pub activation: Activation,
    pub normalize_advantages: bool,
    pub init_log_std: f64,
    /// Polyak factor of target networks.
    pub tau: f64,
    pub batch_size: usize,
    pub replay_capacity: usize,
    /// Environment steps between learning rounds.
    pub update_every: usize,
    /// Gradient updates per learning round.
    pub updates_per_round: usize,
    /// Stored transitions required before learning starts.
    pub learning_starts: usize,
    pub policy_delay: usize,
    pub target_noise: f64,
    pub target_noise_clip: f64,
    pub target_entropy: f64,
}

impl Default for AgentHyperparams {
    fn default() -> Self {
        Self {
            lr: 5e-4,
            gamma: 0.5,
            lambda: 0.95,
            entropy_coef: 0.001,
            clip_eps: 0.2,
            delta: 0.01,
            sigma: 0.3,
            alpha: 0.15,
            epochs: 1,
            backtracks: 10,
            backtrack_coef: 0.5,
            cg_iters: 10,
            cg_damping: 0.01,
            hidden: vec![256, 256],
            activation: Activation::Relu,
            normalize_advantages: true,
            init_log_std: -0.5,
            tau: 0.005,
            batch_size: 4096,
            replay_capacity: 1 << 17,
            update_every: 1,
            updates_per_round: 1,
            learning_starts: 4096,
            policy_delay: 2,
            target_noise: 0.2,
            target_noise_clip: 0.5,
            target_entropy: -3.0,
        }
    }
}

impl AgentHyperparams {
    /// Values selected for each algorithm on the FiberCup phantom.
    pub fn for_algorithm(algo: Algorithm) -> Self {
        let base = Self::default();
        match algo {
            Algorithm::Vpg => Self { lr: 5e-4, gamma: 0.75, ..base },
            Algorithm::A2c => Self { lr: 1e-5, gamma: 0.5, ..base },
            Algorithm::Trpo => Self { lr: 1e-3, gamma: 0.75, delta: 1e-3, epochs: 3, ..base },
            Algorithm::Acktr => Self { lr: 0.01, gamma: 0.5, delta: 1e-3, ..base },
            Algorithm::Ppo => Self { lr: 5e-5, gamma: 0.5, clip_eps: 0.05, epochs: 30, ..base },
            Algorithm::Ddpg => Self { lr: 5e-4, gamma: 0.95, sigma: 0.35, ..base },
            Algorithm::Td3 => Self { lr: 5e-4, gamma: 0.9, sigma: 0.4, ..base },
            Algorithm::Sac => Self { lr: 5e-4, gamma: 0.85, alpha: 0.15, ..base },
            Algorithm::SacAuto => Self { lr: 5e-4, gamma: 0.5, ..base },
        }
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |m: &str| Err(Error::InvalidConfig(m.to_string()));
        if !(0.0..=1.0).contains(&self.gamma) {
            return fail("gamma must be in [0, 1]");
        }
        if !(0.0..=1.0).contains(&self.lambda) {
            return fail("lambda must be in [0, 1]");
        }
        for (name, v) in [
            ("clip_eps", self.clip_eps),
            ("delta", self.delta),
            ("sigma", self.sigma),
            ("alpha", self.alpha),
            ("entropy_coef", self.entropy_coef),
            ("tau", self.tau),
        ] {
            if !(v >= 0.0) {
                return Err(Error::InvalidConfig(format!("{name} must be >= 0, got {v}")));
            }
        }
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return fail("lr must be > 0");
        }
        if self.epochs == 0 || self.batch_size == 0 || self.update_every == 0 || self.policy_delay == 0 {
            return fail("epochs, batch_size, update_every and policy_delay must be > 0");
        }
        if self.hidden.contains(&0) {
            return fail("hidden widths must be > 0");
        }
        if !(self.backtrack_coef > 0.0 && self.backtrack_coef < 1.0) {
            return fail("backtrack_coef must be in (0, 1)");
        }
        if self.replay_capacity == 0 {
            return fail("replay_capacity must be > 0");
        }
        Ok(())
    }
}

/// One named hyperparameter axis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridAxis {
    pub name: String,
    pub values: Vec<f64>,
}

pub const LR_GRID: [f64; 6] = [1e-5, 5e-5, 1e-4, 5e-4, 1e-3, 5e-3];
pub const ACKTR_LR_GRID: [f64; 5] = [0.01, 0.1, 0.15, 0.2, 0.25];
pub const GAMMA_GRID: [f64; 6] = [0.5, 0.75, 0.85, 0.9, 0.95, 0.99];
pub const TRPO_DELTA_GRID: [f64; 3] = [0.001, 0.01, 0.1];
pub const ACKTR_DELTA_GRID: [f64; 5] = [1e-4, 5e-4, 1e-3, 5e-3, 1e-2];
pub const PPO_CLIP_GRID: [f64; 3] = [0.05, 0.1, 0.2];
pub const NOISE_GRID: [f64; 5] = [0.2, 0.25, 0.3, 0.35, 0.4];
pub const ALPHA_GRID: [f64; 5] = [0.075, 0.1, 0.15, 0.2, 0.3];

/// The searched axes of an algorithm.
pub fn default_grid(algo: Algorithm) -> Vec<GridAxis> {
    let axis = |name: &str, v: &[f64]| GridAxis { name: name.into(), values: v.to_vec() };
    let lr = if algo == Algorithm::Acktr { &ACKTR_LR_GRID[..] } else { &LR_GRID[..] };
    let mut axes = vec![axis("lr", lr), axis("gamma", &GAMMA_GRID)];
    match algo {
        Algorithm::Trpo => axes.push(axis("delta", &TRPO_DELTA_GRID)),
        Algorithm::Acktr => axes.push(axis("delta", &ACKTR_DELTA_GRID)),
        Algorithm::Ppo => axes.push(axis("clip_eps", &PPO_CLIP_GRID)),
        Algorithm::Ddpg | Algorithm::Td3 => axes.push(axis("sigma", &NOISE_GRID)),
        Algorithm::Sac => axes.push(axis("alpha", &ALPHA_GRID)),
        _ => {}
    }
    axes
}

impl AgentHyperparams {
    pub fn set(&mut self, name: &str, v: f64) -> Result<()> {
        match name {
            "lr" => self.lr = v,
            "gamma" => self.gamma = v,
            "lambda" => self.lambda = v,
            "entropy_coef" => self.entropy_coef = v,
            "clip_eps" => self.clip_eps = v,
            "delta" => self.delta = v,
            "sigma" => self.sigma = v,
            "alpha" => self.alpha = v,
            "tau" => self.tau = v,
            "init_log_std" => self.init_log_std = v,
            _ => return Err(Error::InvalidConfig(format!("hyperparameter {name:?} cannot be swept"))),
        }
        Ok(())
    }
}

/// Cartesian product of the axes applied to `base`, first axis slowest.
pub fn expand_grid(base: &AgentHyperparams, axes: &[GridAxis]) -> Result<Vec<AgentHyperparams>> {
    let mut out = vec![base.clone()];
    for axis in axes {
        if axis.values.is_empty() {
            return Err(Error::InvalidConfig(format!("grid axis {} is empty", axis.name)));
        }
        let mut next = Vec::with_capacity(out.len() * axis.values.len());
        for hp in &out {
            for &v in &axis.values {
                let mut h = hp.clone();
                h.set(&axis.name, v)?;
                next.push(h);
            }
        }
        out = next;
    }
    Ok(out)
}
