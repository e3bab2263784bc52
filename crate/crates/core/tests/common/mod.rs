//! Brute-force scoring oracle and random toy tractograms.
#![allow(dead_code)]

use std::collections::{BTreeSet, HashSet};

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rltrack::volume::{Phantom, ScalarVolume};
use rltrack::Vec3;

pub type Voxel = (i64, i64, i64);

fn voxel_at(vol: &ScalarVolume, p: &Vec3) -> Option<Voxel> {
    let x = vol.affine().world_to_voxel(p);
    let d = vol.dims();
    let v = (x.x.round() as i64, x.y.round() as i64, x.z.round() as i64);
    let inside = v.0 >= 0 && v.1 >= 0 && v.2 >= 0 && v.0 < d[0] as i64 && v.1 < d[1] as i64 && v.2 < d[2] as i64;
    inside.then_some(v)
}

fn set_of(vol: &ScalarVolume) -> HashSet<Voxel> {
    vol.nonzero_voxels().into_iter().map(|[i, j, k]| (i as i64, j as i64, k as i64)).collect()
}

/// Scans every labelled voxel for the closest one within the 26-neighbourhood.
pub fn label_of(rois: &ScalarVolume, p: &Vec3) -> u32 {
    let Some(v) = voxel_at(rois, p) else { return 0 };
    let mut best: Option<(i64, u32)> = None;
    for [i, j, k] in rois.nonzero_voxels() {
        let d = (i as i64 - v.0, j as i64 - v.1, k as i64 - v.2);
        if d.0.abs() > 1 || d.1.abs() > 1 || d.2.abs() > 1 {
            continue;
        }
        let cand = (d.0 * d.0 + d.1 * d.1 + d.2 * d.2, rois.get(i, j, k) as u32);
        best = Some(best.map_or(cand, |b| b.min(cand)));
    }
    best.map_or(0, |b| b.1)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OracleLabel {
    Dropped,
    Vc(usize),
    Ic(u32, u32),
    Nc,
}

pub fn length(s: &[Vec3]) -> f64 {
    s.windows(2).map(|w| (w[1] - w[0]).norm()).sum()
}

pub fn classify(ph: &Phantom, s: &[Vec3], min_len: f64, max_len: f64) -> OracleLabel {
    let len = length(s);
    if len < min_len || len > max_len {
        return OracleLabel::Dropped;
    }
    let a = label_of(&ph.rois, &s[0]);
    let b = label_of(&ph.rois, s.last().unwrap());
    if a == 0 || b == 0 || a == b {
        return OracleLabel::Nc;
    }
    for (i, bundle) in ph.bundles.iter().enumerate() {
        let want: BTreeSet<u32> = [bundle.head_roi, bundle.tail_roi].into();
        if want == [a, b].into() {
            return OracleLabel::Vc(i);
        }
    }
    OracleLabel::Ic(a.min(b), a.max(b))
}

/// Voxels hit by points spaced at most half the smallest voxel edge.
pub fn visited(vol: &ScalarVolume, lines: &[&[Vec3]]) -> HashSet<Voxel> {
    let vs = vol.affine().voxel_sizes();
    let h = vs.x.min(vs.y).min(vs.z) / 2.0;
    let mut out = HashSet::new();
    for s in lines {
        let mut pts = vec![s[0]];
        for w in s.windows(2) {
            let n = ((w[1] - w[0]).norm() / h).ceil().max(1.0) as usize;
            pts.extend((1..=n).map(|t| w[0].lerp(&w[1], t as f64 / n as f64)));
        }
        out.extend(pts.iter().filter_map(|p| voxel_at(vol, p)));
    }
    out
}

/// (ol, or, f1) from explicit voxel sets.
pub fn coverage(mask: &ScalarVolume, lines: &[&[Vec3]]) -> (f64, f64, f64) {
    let m = set_of(mask);
    let v = visited(mask, lines);
    let inter = v.intersection(&m).count() as f64;
    let outside = v.difference(&m).count() as f64;
    let ol = inter / m.len() as f64;
    let or = outside / m.len() as f64;
    let p = if v.is_empty() { 0.0 } else { inter / v.len() as f64 };
    let f1 = if p + ol == 0.0 { 0.0 } else { 2.0 * p * ol / (p + ol) };
    (ol, or, f1)
}

pub struct OracleReport {
    pub labels: Vec<OracleLabel>,
    pub kept: usize,
    pub vc: usize,
    pub ic: usize,
    pub nc: usize,
    pub vb: usize,
    pub ib: usize,
    pub coverage: Vec<(usize, f64, f64, f64)>,
}

pub fn score(ph: &Phantom, tractogram: &[Vec<Vec3>], min_len: f64, max_len: f64) -> OracleReport {
    let labels: Vec<OracleLabel> = tractogram.iter().map(|s| classify(ph, s, min_len, max_len)).collect();
    let count = |f: &dyn Fn(&OracleLabel) -> bool| labels.iter().filter(|l| f(l)).count();
    let ic_pairs: BTreeSet<(u32, u32)> = labels
        .iter()
        .filter_map(|l| if let OracleLabel::Ic(a, b) = l { Some((*a, *b)) } else { None })
        .collect();
    let coverage: Vec<_> = (0..ph.bundles.len())
        .map(|b| {
            let lines: Vec<&[Vec3]> = tractogram
                .iter()
                .zip(&labels)
                .filter(|(_, l)| **l == OracleLabel::Vc(b))
                .map(|(s, _)| s.as_slice())
                .collect();
            let (ol, or, f1) = coverage(&ph.gt_bundle_masks[b], &lines);
            (lines.len(), ol, or, f1)
        })
        .collect();
    OracleReport {
        kept: count(&|l| *l != OracleLabel::Dropped),
        vc: count(&|l| matches!(l, OracleLabel::Vc(_))),
        ic: count(&|l| matches!(l, OracleLabel::Ic(..))),
        nc: count(&|l| *l == OracleLabel::Nc),
        vb: coverage.iter().filter(|c| c.0 > 0).count(),
        ib: ic_pairs.len(),
        labels,
        coverage,
    }
}

fn jitter(rng: &mut ChaCha8Rng, p: Vec3, r: f64) -> Vec3 {
    p + Vec3::new(rng.random_range(-r..r), rng.random_range(-r..r), rng.random_range(-r..r) * 0.3)
}

fn roi_point(ph: &Phantom, rng: &mut ChaCha8Rng, label: u32) -> Vec3 {
    let vox: Vec<_> = ph.rois.nonzero_voxels().into_iter().filter(|v| ph.rois.get(v[0], v[1], v[2]) as u32 == label).collect();
    let v = vox[rng.random_range(0..vox.len())];
    let c = ph.rois.affine().voxel_to_world(&Vec3::new(v[0] as f64, v[1] as f64, v[2] as f64));
    jitter(rng, c, 2.5)
}

fn random_point(ph: &Phantom, rng: &mut ChaCha8Rng) -> Vec3 {
    let d = ph.rois.dims();
    let v = Vec3::new(
        rng.random_range(-0.6..d[0] as f64 - 0.4),
        rng.random_range(-0.6..d[1] as f64 - 0.4),
        rng.random_range(-0.6..d[2] as f64 - 0.4),
    );
    ph.rois.affine().voxel_to_world(&v)
}

/// Bent polyline from `a` to `b`, with interior points jittered.
fn path(rng: &mut ChaCha8Rng, a: Vec3, b: Vec3) -> Vec<Vec3> {
    let n = rng.random_range(2..12);
    let mut out = vec![a];
    for t in 1..n {
        out.push(jitter(rng, a.lerp(&b, t as f64 / n as f64), 4.0));
    }
    out.push(b);
    out
}

/// Mix of jittered centerlines, ROI-to-ROI paths and random walks.
pub fn toy_tractogram(ph: &Phantom, rng: &mut ChaCha8Rng, n: usize) -> Vec<Vec<Vec3>> {
    let labels: Vec<u32> = ph.bundles.iter().flat_map(|b| [b.head_roi, b.tail_roi]).collect();
    (0..n)
        .map(|_| match rng.random_range(0..4) {
            0 => {
                let b = &ph.bundles[rng.random_range(0..ph.bundles.len())];
                let pts: Vec<Vec3> = b.centerline.iter().map(|p| Vec3::from(*p)).collect();
                let mut s: Vec<Vec3> = pts.iter().map(|p| jitter(rng, *p, 3.0)).collect();
                if rng.random_bool(0.5) {
                    s.reverse();
                }
                s
            }
            1 => {
                let a = labels[rng.random_range(0..labels.len())];
                let b = labels[rng.random_range(0..labels.len())];
                let (pa, pb) = (roi_point(ph, rng, a), roi_point(ph, rng, b));
                path(rng, pa, pb)
            }
            2 => {
                let l = labels[rng.random_range(0..labels.len())];
                let a = roi_point(ph, rng, l);
                let b = random_point(ph, rng);
                path(rng, a, b)
            }
            _ => {
                let (a, b) = (random_point(ph, rng), random_point(ph, rng));
                path(rng, a, b)
            }
        })
        .collect()
}
