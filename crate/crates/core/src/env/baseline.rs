use crate::env::config::Noise;
use crate::env::episode::{Actor, Episode, EpisodeStats, Observation};
use crate::env::streamline::StreamlineBatch;
use crate::env::tracker::TrackingEnv;
use crate::rng::Rng;
use crate::volume::PeaksVolume;
use crate::{Result, Vec3};

/// Deterministic tracker: follows the peak of the nearest voxel that is most
/// aligned with the previous direction, oriented to agree with it.
///
/// Without a previous direction the first stored peak is used as is; a voxel
/// without peaks yields a zero action, which stops the streamline.
pub struct PeakFollower<'a> {
    pub peaks: &'a PeaksVolume,
}

impl PeakFollower<'_> {
    pub fn direction(&self, tip: &Vec3, prev: Option<&Vec3>) -> Vec3 {
        let peaks = self.peaks.peaks_at(tip);
        let Some(prev) = prev else {
            return peaks.first().copied().unwrap_or_else(Vec3::zeros);
        };
        let mut best: Option<(f64, Vec3)> = None;
        for p in peaks {
            let d = p.dot(prev);
            if best.is_none_or(|(b, _)| d.abs() > b) {
                best = Some((d.abs(), if d < 0.0 { -p } else { p }));
            }
        }
        best.map_or_else(Vec3::zeros, |(_, p)| p)
    }
}

impl Actor for PeakFollower<'_> {
    fn act(&self, obs: &Observation<'_>, _rngs: &mut [Rng]) -> Vec<Vec3> {
        obs.tips
            .iter()
            .zip(obs.prev_dirs)
            .map(|(t, p)| self.direction(t, p.as_ref()))
            .collect()
    }
}

/// Tracks every seed with [`PeakFollower`] under the environment's rules,
/// with exploration noise disabled.
pub fn baseline_track(env: &TrackingEnv, seeds: &[Vec3], seed: u64) -> Result<(StreamlineBatch, EpisodeStats)> {
    let mut cfg = env.config().clone();
    cfg.noise = Noise::None;
    let env = env.with_config(cfg, *env.reward_config())?;
    let follower = PeakFollower { peaks: &env.subject().peaks };
    Ok(Episode::new(&env, seeds, seed).track(&follower))
}

/// Average summed reward per streamline of a fixed tractogram, replaying
/// each polyline from its first point as if an agent had drawn it.
pub fn replay_asr(env: &TrackingEnv, tractogram: &[Vec<Vec3>]) -> f64 {
    if tractogram.is_empty() {
        return 0.0;
    }
    let total: f64 = tractogram
        .iter()
        .map(|line| {
            let mut prev: Option<Vec3> = None;
            let mut sum = 0.0;
            for (t, w) in line.windows(2).enumerate() {
                let d = w[1] - w[0];
                if d.norm() == 0.0 {
                    continue;
                }
                let u = d.normalize();
                sum += env.reward(&w[0], &u, prev.as_ref(), env.in_gm(&w[1]), t + 1);
                prev = Some(u);
            }
            sum
        })
        .sum();
    total / tractogram.len() as f64
}
