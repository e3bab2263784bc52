//! Dense networks with hand-written gradients, Gaussian policy densities,
//! optimisers and checkpoints.

pub mod checkpoint;
pub mod dist;
mod kfac;
mod mlp;
mod optim;

pub use checkpoint::Checkpoint;
pub use kfac::{Kfac, KfacStep, KFAC_DAMPING, KFAC_DECAY};
pub use mlp::{Activation, BackwardOptions, Grads, Mlp, Real, Tape, CHUNK_ROWS};
pub use optim::{Adam, RmsProp, ADAM_BETA1, ADAM_BETA2, ADAM_EPS, RMSPROP_EPS, RMSPROP_RHO};
