//! Phantom directories: every volume as a V1 file plus bundle metadata.

use std::path::Path;

use anyhow::{bail, Context, Result};
use rltrack::env::io::save_s1;
use rltrack::volume::io::{load_peaks, load_scalar, load_vector, save_peaks, save_scalar, save_vector};
use rltrack::volume::{generate_phantom, BundleInfo, Phantom, PhantomSpec};

pub const SPEC_FILE: &str = "phantom.toml";
pub const BUNDLES_FILE: &str = "bundles.json";
pub const CENTERLINES_FILE: &str = "centerlines.s1";

fn mask_name(i: usize) -> String {
    format!("bundle_{i:02}.v1")
}

pub fn save_phantom(dir: &Path, spec: &PhantomSpec, ph: &Phantom) -> Result<()> {
    std::fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
    std::fs::write(dir.join(SPEC_FILE), toml::to_string(spec)?)?;
    std::fs::write(dir.join(BUNDLES_FILE), serde_json::to_string_pretty(&ph.bundles)?)?;
    save_vector(&dir.join("fodf.v1"), &ph.fodf)?;
    save_vector(&dir.join("raw.v1"), &ph.raw_signal)?;
    save_peaks(&dir.join("peaks.v1"), &ph.peaks)?;
    save_scalar(&dir.join("wm.v1"), &ph.wm_mask)?;
    save_scalar(&dir.join("interface.v1"), &ph.interface_mask)?;
    save_scalar(&dir.join("fa.v1"), &ph.fa)?;
    save_scalar(&dir.join("rois.v1"), &ph.rois)?;
    for (i, m) in ph.gt_bundle_masks.iter().enumerate() {
        save_scalar(&dir.join(mask_name(i)), m)?;
    }
    save_s1(&dir.join(CENTERLINES_FILE), &ph.centerline_streamlines(1.0))?;
    Ok(())
}

pub fn load_phantom(dir: &Path) -> Result<Phantom> {
    if !dir.is_dir() {
        bail!("phantom directory {} does not exist", dir.display());
    }
    let ctx = |f: &str| format!("cannot load {}", dir.join(f).display());
    let bundles: Vec<BundleInfo> = serde_json::from_str(
        &std::fs::read_to_string(dir.join(BUNDLES_FILE)).with_context(|| ctx(BUNDLES_FILE))?,
    )
    .with_context(|| ctx(BUNDLES_FILE))?;
    let gt_bundle_masks = (0..bundles.len())
        .map(|i| load_scalar(&dir.join(mask_name(i))).with_context(|| ctx(&mask_name(i))))
        .collect::<Result<Vec<_>>>()?;
    Ok(Phantom {
        fodf: load_vector(&dir.join("fodf.v1")).with_context(|| ctx("fodf.v1"))?,
        raw_signal: load_vector(&dir.join("raw.v1")).with_context(|| ctx("raw.v1"))?,
        peaks: load_peaks(&dir.join("peaks.v1")).with_context(|| ctx("peaks.v1"))?,
        wm_mask: load_scalar(&dir.join("wm.v1")).with_context(|| ctx("wm.v1"))?,
        interface_mask: load_scalar(&dir.join("interface.v1")).with_context(|| ctx("interface.v1"))?,
        fa: load_scalar(&dir.join("fa.v1")).with_context(|| ctx("fa.v1"))?,
        rois: load_scalar(&dir.join("rois.v1")).with_context(|| ctx("rois.v1"))?,
        gt_bundle_masks,
        bundles,
    })
}

/// The phantom named by a run config, or the desk phantom.
pub fn phantom_or_desk(dir: Option<&Path>) -> Result<Phantom> {
    match dir {
        Some(d) => load_phantom(d),
        None => Ok(generate_phantom(&PhantomSpec::desk())?),
    }
}
