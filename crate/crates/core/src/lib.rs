//! Reinforcement-learning tractography.
//!
//! The crate is split along the pipeline:
//!
//! * [`volume`]: voxel grids, affine transforms, trilinear sampling, spherical
//!   harmonics and the synthetic phantom generator.
//! * [`env`]: the tracking MDP (seeding, state assembly, stepping, termination,
//!   reward) and the forward/retrack/backward episode protocol.
//! * [`nn`]: small dense networks with manual gradients, policy heads and
//!   the Adam / RMSProp / K-FAC optimizers.
//! * [`agents`]: the nine learning algorithms, buffers, returns, the training
//!   loop and the hyperparameter sweep.
//! * [`scoring`]: connection classification and bundle coverage metrics.

pub mod agents;
pub mod env;
pub mod error;
pub mod nn;
pub mod rng;
pub mod scoring;
pub mod volume;

pub use error::{Error, Result};

/// World-space 3-vector in millimetres.
pub type Vec3 = nalgebra::Vector3<f64>;
