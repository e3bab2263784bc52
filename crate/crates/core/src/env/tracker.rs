use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::env::config::{MaskSampling, RewardConfig, TrackingConfig};
use crate::env::subject::Subject;
use crate::{Result, Vec3};

/// Positions sampled for the state: the tip, then one voxel along +x, -x,
/// +y, -y, +z, -z.
pub const N_STATE_POSITIONS: usize = 7;

/// Norm below which an action has no usable direction.
pub const MIN_ACTION_NORM: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TerminationReason {
    ExitedMask,
    ReachedGm,
    AngleExceeded,
    CumulativeAngleExceeded,
    TooLong,
}

impl TerminationReason {
    pub const ALL: [TerminationReason; 5] = [
        Self::ExitedMask,
        Self::ReachedGm,
        Self::AngleExceeded,
        Self::CumulativeAngleExceeded,
        Self::TooLong,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::ExitedMask => "exited_mask",
            Self::ReachedGm => "reached_gm",
            Self::AngleExceeded => "angle_exceeded",
            Self::CumulativeAngleExceeded => "cumulative_angle_exceeded",
            Self::TooLong => "too_long",
        }
    }
}

/// Turns a raw action into a step of length `step`; `None` for a
/// degenerate action.
pub fn scale_action(a: &Vec3, step: f64) -> Option<Vec3> {
    let n = a.norm();
    (n >= MIN_ACTION_NORM && n.is_finite()).then(|| a * (step / n))
}

/// Per-step reward: peak alignment times smoothness, plus bonuses.
///
/// `length_so_far` is the streamline length in mm including this step.
pub fn reward_step(
    peaks: &[Vec3],
    u: &Vec3,
    u_prev: Option<&Vec3>,
    reached_gm: bool,
    length_so_far: f64,
    cfg: &RewardConfig,
    l_max: f64,
) -> f64 {
    let u = u.normalize();
    let alignment = peaks
        .iter()
        .filter(|v| v.norm_squared() > 0.0)
        .map(|v| v.normalize().dot(&u).abs())
        .fold(0.0, f64::max);
    let smooth = u_prev.map_or(1.0, |p| p.normalize().dot(&u));
    let mut r = alignment * smooth;
    if cfg.alpha_length != 0.0 {
        r += cfg.alpha_length * length_so_far / l_max;
    }
    if reached_gm {
        r += cfg.alpha_gm;
    }
    r
}

fn angle_deg(a: &Vec3, b: &Vec3) -> f64 {
    a.dot(b).clamp(-1.0, 1.0).acos().to_degrees()
}

/// A subject together with the environment constants.
#[derive(Debug, Clone)]
pub struct TrackingEnv {
    subject: Arc<Subject>,
    cfg: TrackingConfig,
    reward: RewardConfig,
    offsets: [Vec3; N_STATE_POSITIONS],
}

impl TrackingEnv {
    pub fn new(subject: Arc<Subject>, cfg: TrackingConfig, reward: RewardConfig) -> Result<Self> {
        cfg.validate()?;
        reward.validate()?;
        let s = subject.signal.affine().voxel_sizes();
        let offsets = [
            Vec3::zeros(),
            Vec3::new(s.x, 0.0, 0.0),
            Vec3::new(-s.x, 0.0, 0.0),
            Vec3::new(0.0, s.y, 0.0),
            Vec3::new(0.0, -s.y, 0.0),
            Vec3::new(0.0, 0.0, s.z),
            Vec3::new(0.0, 0.0, -s.z),
        ];
        Ok(Self { subject, cfg, reward, offsets })
    }

    pub fn subject(&self) -> &Subject {
        &self.subject
    }

    pub fn subject_arc(&self) -> &Arc<Subject> {
        &self.subject
    }

    pub fn config(&self) -> &TrackingConfig {
        &self.cfg
    }

    pub fn reward_config(&self) -> &RewardConfig {
        &self.reward
    }

    /// Same subject with other constants.
    pub fn with_config(&self, cfg: TrackingConfig, reward: RewardConfig) -> Result<Self> {
        Self::new(self.subject.clone(), cfg, reward)
    }

    /// Length of the state vector.
    pub fn state_dim(&self) -> usize {
        let c = self.subject.signal.channels();
        let wm = if self.cfg.include_wm_in_state { N_STATE_POSITIONS } else { 0 };
        N_STATE_POSITIONS * c + wm + 3 * self.cfg.n_prev_dirs
    }

    /// Writes the state at `tip` with direction history `history`
    /// (oldest first).
    ///
    /// Layout: signal at the seven positions, then the WM mask at the same
    /// positions when enabled, then the last `n_prev_dirs` directions,
    /// oldest first, zero-padded at the front.
    pub fn assemble_state_into(&self, tip: &Vec3, history: &[Vec3], out: &mut [f32]) {
        debug_assert_eq!(out.len(), self.state_dim());
        let c = self.subject.signal.channels();
        let mut buf = vec![0.0f64; c];
        let mut at = 0;
        for off in &self.offsets {
            self.subject.signal.sample_into(&(tip + off), &mut buf);
            for (o, v) in out[at..at + c].iter_mut().zip(&buf) {
                *o = *v as f32;
            }
            at += c;
        }
        if self.cfg.include_wm_in_state {
            for off in &self.offsets {
                out[at] = self.wm_value(&(tip + off)) as f32;
                at += 1;
            }
        }
        let n = self.cfg.n_prev_dirs;
        let have = history.len().min(n);
        for o in &mut out[at..at + 3 * (n - have)] {
            *o = 0.0;
        }
        at += 3 * (n - have);
        for d in &history[history.len() - have..] {
            out[at] = d.x as f32;
            out[at + 1] = d.y as f32;
            out[at + 2] = d.z as f32;
            at += 3;
        }
    }

    pub fn assemble_state(&self, tip: &Vec3, history: &[Vec3]) -> Vec<f32> {
        let mut out = vec![0.0; self.state_dim()];
        self.assemble_state_into(tip, history, &mut out);
        out
    }

    pub fn wm_value(&self, p: &Vec3) -> f64 {
        match self.cfg.mask_sampling {
            MaskSampling::Interpolated => self.subject.wm.sample(p),
            MaskSampling::Nearest => self.subject.wm.nearest(p) as f64,
        }
    }

    pub fn in_gm(&self, p: &Vec3) -> bool {
        self.subject.rois.nearest(p) != 0.0
    }

    pub fn fa_at(&self, p: &Vec3) -> f64 {
        self.subject.fa.sample(p)
    }

    /// Stopping rule for a proposed unit step `u` that would move the tip
    /// to `new_tip`. `history` holds the previous unit directions (oldest
    /// first) and `segments_after` the segment count including this step.
    pub fn check_termination(
        &self,
        new_tip: &Vec3,
        u: &Vec3,
        history: &[Vec3],
        segments_after: usize,
    ) -> Option<TerminationReason> {
        let cfg = &self.cfg;
        if self.wm_value(new_tip) <= cfg.mask_threshold {
            return Some(TerminationReason::ExitedMask);
        }
        if self.in_gm(new_tip) {
            return Some(TerminationReason::ReachedGm);
        }
        if let Some(prev) = history.last() {
            if angle_deg(u, prev) > cfg.theta_max {
                return Some(TerminationReason::AngleExceeded);
            }
            let start = history.len().saturating_sub(cfg.cumulative_window - 1);
            let window = &history[start..];
            let mut total = angle_deg(u, prev);
            for w in window.windows(2) {
                total += angle_deg(&w[1], &w[0]);
            }
            if total > cfg.cumulative_angle_max {
                return Some(TerminationReason::CumulativeAngleExceeded);
            }
        }
        if segments_after as f64 * cfg.step_size > cfg.max_length {
            return Some(TerminationReason::TooLong);
        }
        None
    }

    /// Reward for stepping from `tip` along unit `u`.
    pub fn reward(&self, tip: &Vec3, u: &Vec3, prev: Option<&Vec3>, reached_gm: bool, segments_after: usize) -> f64 {
        let peaks = self.subject.peaks.peaks_at(tip);
        reward_step(
            &peaks,
            u,
            prev,
            reached_gm,
            segments_after as f64 * self.cfg.step_size,
            &self.reward,
            self.cfg.max_length,
        )
    }
}
