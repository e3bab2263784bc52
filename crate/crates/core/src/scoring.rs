//! Connection classification and voxel-coverage scores against ground
//! truth.
//!
//! Endpoints are assigned to ROIs by nearest-voxel lookup with a one-voxel
//! dilation of the ROI labels. Coverage counts the voxels visited by a
//! bundle's valid streamlines, with each segment sampled at most half a
//! voxel apart. Overreach is normalised by the ground-truth mask size.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::volume::{linear_index, Dims, Phantom, ScalarVolume};
use crate::{Error, Result, Vec3};

/// Streamlines shorter than this are discarded before scoring (mm).
pub const DEFAULT_MIN_LENGTH: f64 = 20.0;
/// Streamlines longer than this are discarded before scoring (mm).
pub const DEFAULT_MAX_LENGTH: f64 = 200.0;

#[derive(Debug, Clone, PartialEq)]
pub struct GtBundle {
    pub name: String,
    /// Unordered ROI pair, stored with the smaller label first.
    pub pair: (u32, u32),
    pub mask: ScalarVolume,
}

#[derive(Debug, Clone)]
pub struct GroundTruth {
    rois: ScalarVolume,
    /// Label after dilation, per voxel.
    dilated: Vec<u32>,
    bundles: Vec<GtBundle>,
    pub min_length: f64,
    pub max_length: f64,
}

fn ordered(a: u32, b: u32) -> (u32, u32) {
    (a.min(b), a.max(b))
}

/// Own label if set, otherwise the label of the closest labelled
/// 26-neighbour (face before edge before corner, then smallest label).
fn dilate(rois: &ScalarVolume) -> Vec<u32> {
    let dims = rois.dims();
    let mut out = vec![0u32; dims[0] * dims[1] * dims[2]];
    for i in 0..dims[0] {
        for j in 0..dims[1] {
            for k in 0..dims[2] {
                let own = rois.get(i, j, k) as u32;
                let mut best: Option<(i64, u32)> = (own != 0).then_some((0, own));
                if best.is_none() {
                    for di in -1i64..=1 {
                        for dj in -1i64..=1 {
                            for dk in -1i64..=1 {
                                let (x, y, z) = (i as i64 + di, j as i64 + dj, k as i64 + dk);
                                if x < 0 || y < 0 || z < 0 {
                                    continue;
                                }
                                let (x, y, z) = (x as usize, y as usize, z as usize);
                                if x >= dims[0] || y >= dims[1] || z >= dims[2] {
                                    continue;
                                }
                                let l = rois.get(x, y, z) as u32;
                                if l == 0 {
                                    continue;
                                }
                                let key = (di * di + dj * dj + dk * dk, l);
                                if best.is_none_or(|b| key < b) {
                                    best = Some(key);
                                }
                            }
                        }
                    }
                }
                out[linear_index(&dims, i, j, k)] = best.map_or(0, |b| b.1);
            }
        }
    }
    out
}

impl GroundTruth {
    pub fn new(rois: ScalarVolume, bundles: Vec<GtBundle>, min_length: f64, max_length: f64) -> Result<Self> {
        if !(min_length >= 0.0 && max_length >= min_length) {
            return Err(Error::InvalidConfig(format!("length filter [{min_length}, {max_length}] is empty")));
        }
        let mut pairs = Vec::new();
        for (b, bundle) in bundles.iter().enumerate() {
            if bundle.mask.dims() != rois.dims() || bundle.mask.affine() != rois.affine() {
                return Err(Error::ShapeMismatch(format!("mask of bundle {} differs from the ROI grid", bundle.name)));
            }
            if bundle.mask.count_nonzero() == 0 {
                return Err(Error::EmptyBundleMask(b));
            }
            let (a, c) = bundle.pair;
            if a == 0 || c == 0 || a == c {
                return Err(Error::InvalidConfig(format!("bundle {} has invalid ROI pair {:?}", bundle.name, bundle.pair)));
            }
            let p = ordered(a, c);
            if pairs.contains(&p) {
                return Err(Error::InvalidConfig(format!("ROI pair {p:?} is used by two bundles")));
            }
            pairs.push(p);
        }
        let bundles = bundles.into_iter().map(|b| GtBundle { pair: ordered(b.pair.0, b.pair.1), ..b }).collect();
        let dilated = dilate(&rois);
        Ok(Self { rois, dilated, bundles, min_length, max_length })
    }

    pub fn from_phantom(ph: &Phantom, min_length: f64, max_length: f64) -> Result<Self> {
        for (b, m) in ph.gt_bundle_masks.iter().enumerate() {
            if m.data().iter().zip(ph.wm_mask.data()).any(|(m, w)| *m != 0.0 && *w == 0.0) {
                return Err(Error::InvalidConfig(format!("mask of bundle {b} leaves the white matter")));
            }
        }
        let bundles = ph
            .bundles
            .iter()
            .zip(&ph.gt_bundle_masks)
            .map(|(b, m)| GtBundle { name: b.name.clone(), pair: (b.head_roi, b.tail_roi), mask: m.clone() })
            .collect();
        Self::new(ph.rois.clone(), bundles, min_length, max_length)
    }

    pub fn bundles(&self) -> &[GtBundle] {
        &self.bundles
    }

    pub fn rois(&self) -> &ScalarVolume {
        &self.rois
    }

    /// ROI label of a point after dilation, 0 outside every ROI.
    pub fn endpoint_label(&self, p: &Vec3) -> u32 {
        self.rois.nearest_voxel(p).map_or(0, |[i, j, k]| self.dilated[linear_index(&self.rois.dims(), i, j, k)])
    }

    pub fn bundle_of_pair(&self, a: u32, b: u32) -> Option<usize> {
        let p = ordered(a, b);
        self.bundles.iter().position(|x| x.pair == p)
    }

    pub fn keeps(&self, streamline: &[Vec3]) -> bool {
        let len = polyline_length(streamline);
        len >= self.min_length && len <= self.max_length
    }

    pub fn classify(&self, streamline: &[Vec3]) -> Classification {
        if !self.keeps(streamline) {
            return Classification::Discarded;
        }
        let (first, last) = (streamline[0], streamline[streamline.len() - 1]);
        let (a, b) = (self.endpoint_label(&first), self.endpoint_label(&last));
        if a == 0 || b == 0 || a == b {
            return Classification::NoConnection;
        }
        match self.bundle_of_pair(a, b) {
            Some(bundle) => Classification::Valid(bundle),
            None => Classification::Invalid(ordered(a, b)),
        }
    }
}

pub fn polyline_length(points: &[Vec3]) -> f64 {
    points.windows(2).map(|w| (w[1] - w[0]).norm()).sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Classification {
    /// Outside the length filter.
    Discarded,
    /// Connects the ROI pair of a ground-truth bundle (its index).
    Valid(usize),
    /// Connects two ROIs that no bundle joins.
    Invalid((u32, u32)),
    NoConnection,
}

pub fn classify_streamlines(tractogram: &[Vec<Vec3>], gt: &GroundTruth) -> Vec<Classification> {
    tractogram.par_iter().map(|s| gt.classify(s)).collect()
}

/// Voxels visited by a streamline, as flat indices of the mask grid.
pub fn rasterize_into(streamline: &[Vec3], mask: &ScalarVolume, visited: &mut [bool]) {
    let dims: Dims = mask.dims();
    let vs = mask.affine().voxel_sizes();
    let spacing = 0.5 * vs.x.min(vs.y).min(vs.z);
    let mut mark = |p: &Vec3| {
        if let Some([i, j, k]) = mask.nearest_voxel(p) {
            visited[linear_index(&dims, i, j, k)] = true;
        }
    };
    if let Some(p) = streamline.first() {
        mark(p);
    }
    for w in streamline.windows(2) {
        let d = w[1] - w[0];
        let n = ((d.norm() / spacing).ceil() as usize).max(1);
        for s in 1..=n {
            mark(&(w[0] + d * (s as f64 / n as f64)));
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Coverage {
    pub ol: f64,
    pub or_: f64,
    pub f1: f64,
}

/// Overlap, overreach and Dice of the voxels visited by `streamlines`.
pub fn coverage(streamlines: &[&[Vec3]], mask: &ScalarVolume) -> Result<Coverage> {
    let mask_n = mask.count_nonzero();
    if mask_n == 0 {
        return Err(Error::EmptyBundleMask(0));
    }
    let mut visited = vec![false; mask.data().len()];
    for s in streamlines {
        rasterize_into(s, mask, &mut visited);
    }
    let (mut hit, mut miss) = (0usize, 0usize);
    for (v, m) in visited.iter().zip(mask.data()) {
        if *v {
            if *m != 0.0 {
                hit += 1;
            } else {
                miss += 1;
            }
        }
    }
    let ol = hit as f64 / mask_n as f64;
    let or_ = miss as f64 / mask_n as f64;
    let precision = if hit + miss > 0 { hit as f64 / (hit + miss) as f64 } else { 0.0 };
    let f1 = if precision + ol > 0.0 { 2.0 * precision * ol / (precision + ol) } else { 0.0 };
    Ok(Coverage { ol, or_, f1 })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BundleScore {
    pub name: String,
    pub roi_a: u32,
    pub roi_b: u32,
    /// Valid streamlines assigned to the bundle.
    pub streamlines: usize,
    pub ol: f64,
    #[serde(rename = "or")]
    pub or_: f64,
    pub f1: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreReport {
    pub n_input: usize,
    pub n_kept: usize,
    pub n_vc: usize,
    pub n_ic: usize,
    pub n_nc: usize,
    pub vc_rate: f64,
    pub ic_rate: f64,
    pub nc_rate: f64,
    pub vb: usize,
    pub ib: usize,
    pub bundles: Vec<BundleScore>,
    pub mean_ol: f64,
    pub mean_or: f64,
    pub mean_f1: f64,
}

pub fn score(tractogram: &[Vec<Vec3>], gt: &GroundTruth) -> Result<ScoreReport> {
    if tractogram.is_empty() {
        return Err(Error::EmptyTractogram);
    }
    let labels = classify_streamlines(tractogram, gt);
    let n_kept = labels.iter().filter(|l| **l != Classification::Discarded).count();
    if n_kept == 0 {
        return Err(Error::EmptyTractogram);
    }
    let mut per_bundle: Vec<Vec<&[Vec3]>> = vec![Vec::new(); gt.bundles.len()];
    let mut invalid_pairs = std::collections::BTreeSet::new();
    let (mut n_vc, mut n_ic, mut n_nc) = (0, 0, 0);
    for (s, l) in tractogram.iter().zip(&labels) {
        match l {
            Classification::Valid(b) => {
                n_vc += 1;
                per_bundle[*b].push(s.as_slice());
            }
            Classification::Invalid(p) => {
                n_ic += 1;
                invalid_pairs.insert(*p);
            }
            Classification::NoConnection => n_nc += 1,
            Classification::Discarded => {}
        }
    }
    let bundles = gt
        .bundles
        .par_iter()
        .zip(&per_bundle)
        .enumerate()
        .map(|(b, (bundle, lines))| {
            let c = coverage(lines, &bundle.mask).map_err(|_| Error::EmptyBundleMask(b))?;
            Ok(BundleScore {
                name: bundle.name.clone(),
                roi_a: bundle.pair.0,
                roi_b: bundle.pair.1,
                streamlines: lines.len(),
                ol: c.ol,
                or_: c.or_,
                f1: c.f1,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let nb = bundles.len().max(1) as f64;
    let n = n_kept as f64;
    Ok(ScoreReport {
        n_input: tractogram.len(),
        n_kept,
        n_vc,
        n_ic,
        n_nc,
        vc_rate: n_vc as f64 / n,
        ic_rate: n_ic as f64 / n,
        nc_rate: n_nc as f64 / n,
        vb: per_bundle.iter().filter(|l| !l.is_empty()).count(),
        ib: invalid_pairs.len(),
        mean_ol: bundles.iter().map(|b| b.ol).sum::<f64>() / nb,
        mean_or: bundles.iter().map(|b| b.or_).sum::<f64>() / nb,
        mean_f1: bundles.iter().map(|b| b.f1).sum::<f64>() / nb,
        bundles,
    })
}

pub const SCORES_CSV_HEADER: &str = "scope,roi_a,roi_b,streamlines,vc_rate,ic_rate,nc_rate,vb,ib,ol,or,f1";

/// One row per bundle followed by a global row.
pub fn write_scores_csv<W: Write>(mut w: W, r: &ScoreReport) -> std::io::Result<()> {
    writeln!(w, "{SCORES_CSV_HEADER}")?;
    for b in &r.bundles {
        writeln!(w, "{},{},{},{},,,,,,{},{},{}", b.name, b.roi_a, b.roi_b, b.streamlines, b.ol, b.or_, b.f1)?;
    }
    writeln!(
        w,
        "global,,,{},{},{},{},{},{},{},{},{}",
        r.n_kept, r.vc_rate, r.ic_rate, r.nc_rate, r.vb, r.ib, r.mean_ol, r.mean_or, r.mean_f1
    )
}
