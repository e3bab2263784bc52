use ndarray::{s, Array2, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::env::{Actor, Observation};
use crate::nn::dist::{clamp_log_std, squashed_sample, standard_normal};
use crate::nn::{Activation, Checkpoint, Mlp};
use crate::rng::Rng;
use crate::{Error, Result, Vec3};

pub const ACTION_DIM: usize = 3;

/// How network outputs become actions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PolicyHead {
    /// Mean output plus a state-independent log-std vector.
    Gaussian,
    /// Mean and log-std outputs, sample squashed by tanh.
    Squashed,
    /// `tanh` of the output.
    Deterministic,
}

impl PolicyHead {
    pub fn output_dim(self) -> usize {
        match self {
            Self::Squashed => 2 * ACTION_DIM,
            _ => ACTION_DIM,
        }
    }
}

/// An actor network with its action head.
#[derive(Debug, Clone)]
pub struct Policy {
    pub head: PolicyHead,
    pub net: Mlp<f32>,
    /// Used by the Gaussian head only.
    pub log_std: Vec<f64>,
}

pub fn layer_sizes(input: usize, hidden: &[usize], output: usize) -> Vec<usize> {
    let mut sizes = Vec::with_capacity(hidden.len() + 2);
    sizes.push(input);
    sizes.extend_from_slice(hidden);
    sizes.push(output);
    sizes
}

impl Policy {
    pub fn new(
        head: PolicyHead,
        state_dim: usize,
        hidden: &[usize],
        activation: Activation,
        init_log_std: f64,
        rng: &mut Rng,
    ) -> Result<Self> {
        let net = Mlp::new(&layer_sizes(state_dim, hidden, head.output_dim()), activation, rng)?;
        let log_std = match head {
            PolicyHead::Gaussian => vec![clamp_log_std(init_log_std) as f32 as f64; ACTION_DIM],
            _ => Vec::new(),
        };
        Ok(Self { head, net, log_std })
    }

    pub fn state_dim(&self) -> usize {
        self.net.input_dim()
    }

    /// The most likely action for each row.
    pub fn greedy(&self, states: ArrayView2<'_, f32>) -> Result<Vec<[f64; 3]>> {
        let out = self.net.forward(states)?;
        Ok(out
            .rows()
            .into_iter()
            .map(|r| {
                let f = |k: usize| r[k] as f64;
                match self.head {
                    PolicyHead::Gaussian => [f(0), f(1), f(2)],
                    PolicyHead::Squashed | PolicyHead::Deterministic => [f(0).tanh(), f(1).tanh(), f(2).tanh()],
                }
            })
            .collect())
    }

    /// One exploratory action per row, drawn from `rngs[row]`. The
    /// deterministic head returns its greedy action.
    pub fn sample(&self, states: ArrayView2<'_, f32>, rngs: &mut [Rng]) -> Result<Vec<[f64; 3]>> {
        if states.nrows() != rngs.len() {
            return Err(Error::ShapeMismatch(format!("{} states but {} generators", states.nrows(), rngs.len())));
        }
        if self.head == PolicyHead::Deterministic {
            return self.greedy(states);
        }
        let out = self.net.forward(states)?;
        Ok(out
            .rows()
            .into_iter()
            .zip(rngs.iter_mut())
            .map(|(r, rng)| {
                let eps = standard_normal(rng, ACTION_DIM);
                match self.head {
                    PolicyHead::Gaussian => std::array::from_fn(|k| {
                        r[k] as f64 + clamp_log_std(self.log_std[k]).exp() * eps[k]
                    }),
                    _ => {
                        let mean: Vec<f64> = (0..3).map(|k| r[k] as f64).collect();
                        let ls: Vec<f64> = (3..6).map(|k| r[k] as f64).collect();
                        let smp = squashed_sample(&mean, &ls, &eps);
                        [smp.action[0], smp.action[1], smp.action[2]]
                    }
                }
            })
            .collect())
    }

    pub fn is_finite(&self) -> bool {
        self.net.is_finite() && self.log_std.iter().all(|v| v.is_finite())
    }

    pub fn to_checkpoint(&self, meta: serde_json::Value) -> Checkpoint {
        let mut meta = meta;
        meta["head"] = serde_json::to_value(self.head).expect("head serialises");
        let mut ck = Checkpoint::new(meta).with_net("actor", &self.net);
        if self.head == PolicyHead::Gaussian {
            let ls: Vec<f32> = self.log_std.iter().map(|&v| v as f32).collect();
            ck = ck.with_vector("log_std", &ls);
        }
        ck
    }

    pub fn from_checkpoint(ck: &Checkpoint) -> Result<Self> {
        let head: PolicyHead = ck
            .meta
            .get("head")
            .cloned()
            .ok_or_else(|| Error::format("checkpoint", "missing policy head"))
            .and_then(|v| serde_json::from_value(v).map_err(|e| Error::format("checkpoint", e.to_string())))?;
        let net = ck.net("actor")?.clone();
        if net.output_dim() != head.output_dim() {
            return Err(Error::format("checkpoint", "actor output does not match its head"));
        }
        let log_std = match head {
            PolicyHead::Gaussian => ck.vector("log_std")?.iter().map(|&v| v as f64).collect(),
            _ => Vec::new(),
        };
        Ok(Self { head, net, log_std })
    }
}

fn to_vec3(a: &[f64; 3]) -> Vec3 {
    Vec3::new(a[0], a[1], a[2])
}

/// Tracks with the greedy action.
impl Actor for Policy {
    fn act(&self, obs: &Observation<'_>, _rngs: &mut [Rng]) -> Vec<Vec3> {
        self.greedy(obs.states).expect("state width matches the policy").iter().map(to_vec3).collect()
    }
}

/// Tracks with exploratory actions.
pub struct Sampling<'a>(pub &'a Policy);

impl Actor for Sampling<'_> {
    fn act(&self, obs: &Observation<'_>, rngs: &mut [Rng]) -> Vec<Vec3> {
        self.0.sample(obs.states, rngs).expect("state width matches the policy").iter().map(to_vec3).collect()
    }
}

/// `[s | a]` rows for a Q-network.
pub fn state_action(states: ArrayView2<'_, f32>, actions: &[[f32; 3]]) -> Array2<f32> {
    let (n, d) = states.dim();
    assert_eq!(actions.len(), n, "one action per state");
    let mut x = Array2::zeros((n, d + ACTION_DIM));
    x.slice_mut(s![.., ..d]).assign(&states);
    for (i, a) in actions.iter().enumerate() {
        for k in 0..ACTION_DIM {
            x[[i, d + k]] = a[k];
        }
    }
    x
}

/// Mean squared error `mean((v − y)²)` of a single-output network and its
/// gradient with respect to the outputs.
pub fn mse_grad(out: &Array2<f32>, targets: &[f64]) -> (f64, Array2<f32>) {
    let n = targets.len().max(1) as f64;
    let mut dy = Array2::zeros((targets.len(), 1));
    let mut loss = 0.0;
    for (i, &y) in targets.iter().enumerate() {
        let e = out[[i, 0]] as f64 - y;
        loss += e * e / n;
        dy[[i, 0]] = (2.0 * e / n) as f32;
    }
    (loss, dy)
}

pub fn column(out: &Array2<f32>, k: usize) -> Vec<f64> {
    out.column(k).iter().map(|&v| v as f64).collect()
}
