use serde::{Deserialize, Serialize};

use crate::volume::DEFAULT_MASK_THRESHOLD;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SignalKind {
    /// Order-6 SH coefficients (28 channels).
    Fodf,
    /// Signal on the 100 fixed directions.
    Raw,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Seeding {
    /// Seeds everywhere in WM; tracking runs forward then backward.
    Wm,
    /// Seeds on the WM side of the WM/GM interface; single pass.
    Interface,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MaskSampling {
    Interpolated,
    Nearest,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Noise {
    None,
    /// Gaussian action noise with std `sigma0 * FA(tip)`.
    FaScaled { sigma0: f64 },
}

/// Environment constants. Lengths in mm, angles in degrees.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrackingConfig {
    pub step_size: f64,
    pub max_length: f64,
    pub min_length: f64,
    pub theta_max: f64,
    pub cumulative_angle_max: f64,
    /// Number of most recent segments whose turning angles are summed.
    pub cumulative_window: usize,
    pub n_prev_dirs: usize,
    pub include_wm_in_state: bool,
    pub signal_kind: SignalKind,
    pub seeding: Seeding,
    pub retracking: bool,
    pub seeds_per_voxel: usize,
    pub noise: Noise,
    pub mask_threshold: f64,
    pub mask_sampling: MaskSampling,
}

impl Default for TrackingConfig {
    fn default() -> Self {
        Self {
            step_size: 0.75,
            max_length: 200.0,
            min_length: 20.0,
            theta_max: 30.0,
            cumulative_angle_max: 180.0,
            cumulative_window: 10,
            n_prev_dirs: 4,
            include_wm_in_state: true,
            signal_kind: SignalKind::Fodf,
            seeding: Seeding::Wm,
            retracking: true,
            seeds_per_voxel: 10,
            noise: Noise::None,
            mask_threshold: DEFAULT_MASK_THRESHOLD,
            mask_sampling: MaskSampling::Interpolated,
        }
    }
}

impl TrackingConfig {
    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::InvalidConfig(m));
        if !(self.step_size > 0.0 && self.step_size.is_finite()) {
            return fail(format!("step_size must be > 0, got {}", self.step_size));
        }
        if !(self.min_length < self.max_length) {
            return fail(format!(
                "min_length {} must be below max_length {}",
                self.min_length, self.max_length
            ));
        }
        if !(self.theta_max > 0.0 && self.theta_max <= 90.0) {
            return fail(format!("theta_max {} must be in (0, 90]", self.theta_max));
        }
        if !(self.cumulative_angle_max > 0.0) || self.cumulative_window < 2 {
            return fail("cumulative angle threshold must be > 0 over a window of >= 2 segments".into());
        }
        if ![0, 2, 4].contains(&self.n_prev_dirs) {
            return fail(format!("n_prev_dirs must be 0, 2 or 4, got {}", self.n_prev_dirs));
        }
        if self.seeds_per_voxel == 0 {
            return fail("seeds_per_voxel must be > 0".into());
        }
        if let Noise::FaScaled { sigma0 } = self.noise {
            if !(sigma0 >= 0.0) {
                return fail(format!("noise sigma0 must be >= 0, got {sigma0}"));
            }
        }
        Ok(())
    }

    /// Rescales the step so a volume with `target_voxel` mm voxels is crossed
    /// in as many steps per voxel as with `train_voxel` mm voxels.
    pub fn rescaled_step(step: f64, train_voxel: f64, target_voxel: f64) -> f64 {
        step * target_voxel / train_voxel
    }
}

/// Bonus terms added to the alignment reward.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct RewardConfig {
    pub alpha_length: f64,
    pub alpha_gm: f64,
}

impl RewardConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha_length.is_finite() && self.alpha_gm.is_finite())
            || self.alpha_length < 0.0
            || self.alpha_gm < 0.0
        {
            return Err(Error::InvalidConfig(format!(
                "reward bonuses must be finite and >= 0, got {self:?}"
            )));
        }
        Ok(())
    }
}
