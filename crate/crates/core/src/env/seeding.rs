use rand::seq::index;
use rand::Rng as _;

use crate::env::config::{Seeding, TrackingConfig};
use crate::env::subject::Subject;
use crate::rng::Rng;
use crate::volume::ScalarVolume;
use crate::{Error, Result, Vec3};

/// `seeds_per_voxel` points uniformly jittered inside every nonzero voxel.
pub fn seed_points(mask: &ScalarVolume, seeds_per_voxel: usize, rng: &mut Rng) -> Result<Vec<Vec3>> {
    if seeds_per_voxel == 0 {
        return Err(Error::InvalidConfig("seeds_per_voxel must be > 0".into()));
    }
    let voxels = mask.nonzero_voxels();
    if voxels.is_empty() {
        return Err(Error::EmptySeedMask);
    }
    let affine = mask.affine();
    let mut out = Vec::with_capacity(voxels.len() * seeds_per_voxel);
    for [i, j, k] in voxels {
        for _ in 0..seeds_per_voxel {
            let jitter = Vec3::new(
                rng.random_range(-0.5..0.5),
                rng.random_range(-0.5..0.5),
                rng.random_range(-0.5..0.5),
            );
            let v = Vec3::new(i as f64, j as f64, k as f64) + jitter;
            out.push(affine.voxel_to_world(&v));
        }
    }
    Ok(out)
}

/// The mask seeds are drawn from under `cfg.seeding`.
pub fn seed_mask<'a>(subject: &'a Subject, cfg: &TrackingConfig) -> &'a ScalarVolume {
    match cfg.seeding {
        Seeding::Wm => &subject.wm,
        Seeding::Interface => &subject.interface,
    }
}

/// Seeds for a whole subject under `cfg`.
pub fn seed_batch(subject: &Subject, cfg: &TrackingConfig, rng: &mut Rng) -> Result<Vec<Vec3>> {
    seed_points(seed_mask(subject, cfg), cfg.seeds_per_voxel, rng)
}

/// `n` seeds drawn without replacement (all of them if `n` exceeds the pool),
/// kept in pool order.
pub fn sample_seeds(pool: &[Vec3], n: usize, rng: &mut Rng) -> Vec<Vec3> {
    if n >= pool.len() {
        return pool.to_vec();
    }
    let mut picked = index::sample(rng, pool.len(), n).into_vec();
    picked.sort_unstable();
    picked.into_iter().map(|i| pool[i]).collect()
}
