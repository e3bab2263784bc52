//! Synthetic tube phantom.
//!
//! Bundles are tubes around parametric centerlines. Each tube is capped at
//! both ends by a labelled region of interest (the grey-matter targets).
//! Per-voxel peaks are the centerline tangents of the tubes covering the
//! voxel centre; the fODF is the SH projection of lobes around those peaks.

use serde::{Deserialize, Serialize};

use crate::{Error, Result, Vec3};

use super::grid::{linear_index, voxel_count, voxel_of, Dims};
use super::sh::{lobe_sum, sh_project_peaks, DEFAULT_KAPPA, N_SH_COEFFS};
use super::sphere::{sphere_directions, N_SPHERE_DIRECTIONS};
use super::{AffineTransform, PeaksVolume, ScalarVolume, VectorVolume};

pub const FA_SINGLE: f32 = 0.8;
pub const FA_CROSSING: f32 = 0.5;

fn default_kappa() -> f64 {
    DEFAULT_KAPPA
}
fn default_max_peaks() -> usize {
    3
}
fn default_merge_angle() -> f64 {
    20.0
}
fn default_segment_mm() -> f64 {
    0.5
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Centerline {
    /// Straight segments through the listed world points (mm).
    Polyline { points: Vec<[f64; 3]> },
    /// Circular arc in the axial plane `z = center[2]`, angles in degrees
    /// measured from +x towards +y.
    Arc {
        center: [f64; 3],
        radius: f64,
        start_deg: f64,
        end_deg: f64,
        #[serde(default = "default_segment_mm")]
        segment_mm: f64,
    },
}

impl Centerline {
    pub fn points(&self) -> Vec<Vec3> {
        match self {
            Centerline::Polyline { points } => points.iter().map(|p| Vec3::new(p[0], p[1], p[2])).collect(),
            Centerline::Arc {
                center,
                radius,
                start_deg,
                end_deg,
                segment_mm,
            } => {
                let sweep = (end_deg - start_deg).to_radians();
                let len = sweep.abs() * radius;
                let n = ((len / segment_mm.max(1e-3)).ceil() as usize).max(1);
                (0..=n)
                    .map(|i| {
                        let a = start_deg.to_radians() + sweep * i as f64 / n as f64;
                        Vec3::new(center[0] + radius * a.cos(), center[1] + radius * a.sin(), center[2])
                    })
                    .collect()
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BundleSpec {
    pub name: String,
    /// Tube radius in mm.
    pub radius: f64,
    pub head_roi: u32,
    pub tail_roi: u32,
    pub centerline: Centerline,
}

/// Declarative phantom description, usually read from TOML.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhantomSpec {
    pub dims: Dims,
    /// Isotropic voxel edge in mm.
    pub voxel_size: f64,
    /// World position of voxel (0, 0, 0).
    #[serde(default)]
    pub origin: [f64; 3],
    #[serde(default = "default_kappa")]
    pub kappa: f64,
    #[serde(default = "default_max_peaks")]
    pub max_peaks: usize,
    /// Depth (mm along the centerline) of the ROI cap at each end. Defaults
    /// to one voxel.
    #[serde(default)]
    pub roi_depth: Option<f64>,
    /// Tangents closer than this (degrees, sign-insensitive) merge into one peak.
    #[serde(default = "default_merge_angle")]
    pub peak_merge_angle_deg: f64,
    pub bundles: Vec<BundleSpec>,
}

impl PhantomSpec {
    /// Three-bundle desk phantom: a straight horizontal bundle, a vertical
    /// bundle crossing it at right angles, and a quarter-circle arc. 3 mm
    /// voxels over three axial slices.
    pub fn desk() -> Self {
        let z = 3.0;
        Self {
            dims: [24, 24, 3],
            voxel_size: 3.0,
            origin: [0.0; 3],
            kappa: DEFAULT_KAPPA,
            max_peaks: 3,
            roi_depth: None,
            peak_merge_angle_deg: default_merge_angle(),
            bundles: vec![
                BundleSpec {
                    name: "straight".into(),
                    radius: 4.5,
                    head_roi: 1,
                    tail_roi: 2,
                    centerline: Centerline::Polyline {
                        points: vec![[3.0, 21.0, z], [66.0, 21.0, z]],
                    },
                },
                BundleSpec {
                    name: "crossing".into(),
                    radius: 4.5,
                    head_roi: 3,
                    tail_roi: 4,
                    centerline: Centerline::Polyline {
                        points: vec![[21.0, 3.0, z], [21.0, 66.0, z]],
                    },
                },
                BundleSpec {
                    name: "curved".into(),
                    radius: 4.5,
                    head_roi: 5,
                    tail_roi: 6,
                    centerline: Centerline::Arc {
                        center: [33.0, 33.0, z],
                        radius: 30.0,
                        start_deg: 0.0,
                        end_deg: 90.0,
                        segment_mm: default_segment_mm(),
                    },
                },
            ],
        }
    }

    pub fn affine(&self) -> Result<AffineTransform> {
        AffineTransform::scaled(self.voxel_size, Vec3::from(self.origin))
    }

    pub fn roi_depth(&self) -> f64 {
        self.roi_depth.unwrap_or(self.voxel_size)
    }

    pub fn validate(&self) -> Result<()> {
        if self.dims.contains(&0) {
            return Err(Error::InvalidPhantom(format!("dims {:?} must be positive", self.dims)));
        }
        if !(self.voxel_size > 0.0) {
            return Err(Error::InvalidPhantom("voxel_size must be > 0".into()));
        }
        if !(self.kappa > 0.0) {
            return Err(Error::InvalidPhantom("kappa must be > 0".into()));
        }
        if self.max_peaks == 0 || self.max_peaks > 5 {
            return Err(Error::InvalidPhantom("max_peaks must be in 1..=5".into()));
        }
        if self.bundles.is_empty() {
            return Err(Error::InvalidPhantom("no bundles".into()));
        }
        let mut ids = std::collections::HashSet::new();
        for b in &self.bundles {
            if !(b.radius > 0.0) {
                return Err(Error::InvalidPhantom(format!("bundle {} radius must be > 0", b.name)));
            }
            if b.head_roi == 0 || b.tail_roi == 0 {
                return Err(Error::InvalidPhantom(format!("bundle {}: ROI id 0 is reserved", b.name)));
            }
            if b.head_roi == b.tail_roi {
                return Err(Error::InvalidPhantom(format!(
                    "bundle {}: head and tail ROI ids must differ",
                    b.name
                )));
            }
            for id in [b.head_roi, b.tail_roi] {
                if !ids.insert(id) {
                    return Err(Error::InvalidPhantom(format!("ROI id {id} used by more than one bundle end")));
                }
            }
            if b.centerline.points().len() < 2 {
                return Err(Error::InvalidPhantom(format!("bundle {}: centerline needs 2 points", b.name)));
            }
        }
        Ok(())
    }
}

/// Ground-truth facts about one generated bundle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BundleInfo {
    pub name: String,
    pub head_roi: u32,
    pub tail_roi: u32,
    /// Centerline sampled as given (mm).
    pub centerline: Vec<[f64; 3]>,
}

#[derive(Debug, Clone)]
pub struct Phantom {
    pub fodf: VectorVolume,
    /// Lobe sum sampled on the 100 fixed directions, min-max normalised per voxel.
    pub raw_signal: VectorVolume,
    pub peaks: PeaksVolume,
    pub wm_mask: ScalarVolume,
    pub interface_mask: ScalarVolume,
    pub fa: ScalarVolume,
    /// ROI labels (0 = none).
    pub rois: ScalarVolume,
    pub gt_bundle_masks: Vec<ScalarVolume>,
    pub bundles: Vec<BundleInfo>,
}

struct Projection {
    distance: f64,
    tangent: Vec3,
    arc_pos: f64,
    interior: bool,
}

fn project_on_polyline(pts: &[Vec3], cum: &[f64], p: &Vec3) -> Projection {
    let mut best = Projection {
        distance: f64::INFINITY,
        tangent: Vec3::x(),
        arc_pos: 0.0,
        interior: false,
    };
    let last = pts.len() - 2;
    for s in 0..=last {
        let (a, b) = (pts[s], pts[s + 1]);
        let ab = b - a;
        let len2 = ab.norm_squared();
        if len2 == 0.0 {
            continue;
        }
        let raw_t = (p - a).dot(&ab) / len2;
        let t = raw_t.clamp(0.0, 1.0);
        let d = (a + ab * t - p).norm();
        if d < best.distance {
            best = Projection {
                distance: d,
                tangent: ab / len2.sqrt(),
                arc_pos: cum[s] + t * len2.sqrt(),
                interior: !((s == 0 && raw_t < 0.0) || (s == last && raw_t > 1.0)),
            };
        }
    }
    best
}

fn merge_peaks(tangents: &[Vec3], merge_cos: f64, max_peaks: usize) -> Vec<Vec3> {
    let mut out: Vec<Vec3> = Vec::new();
    for t in tangents {
        if out.iter().all(|p| p.dot(t).abs() < merge_cos) && out.len() < max_peaks {
            out.push(*t);
        }
    }
    out
}

/// Builds every volume of the phantom.
pub fn generate_phantom(spec: &PhantomSpec) -> Result<Phantom> {
    spec.validate()?;
    let affine = spec.affine()?;
    let dims = spec.dims;
    let nvox = voxel_count(&dims);

    let centerlines: Vec<Vec<Vec3>> = spec.bundles.iter().map(|b| b.centerline.points()).collect();
    for (b, pts) in spec.bundles.iter().zip(&centerlines) {
        for p in pts {
            let v = affine.world_to_voxel(p);
            if (0..3).any(|a| v[a] < -0.5 || v[a] > dims[a] as f64 - 0.5) {
                return Err(Error::InvalidPhantom(format!(
                    "bundle {} leaves the grid at {:?}",
                    b.name,
                    p.as_slice()
                )));
            }
        }
    }
    let cumulative: Vec<Vec<f64>> = centerlines
        .iter()
        .map(|pts| {
            let mut acc = vec![0.0];
            for w in pts.windows(2) {
                acc.push(acc.last().unwrap() + (w[1] - w[0]).norm());
            }
            acc
        })
        .collect();

    let roi_depth = spec.roi_depth();
    let merge_cos = spec.peak_merge_angle_deg.to_radians().cos();
    let mut bundle_masks = vec![vec![0f32; nvox]; spec.bundles.len()];
    let mut rois = vec![0f32; nvox];
    let mut peaks_per_voxel: Vec<Vec<Vec3>> = vec![Vec::new(); nvox];

    for idx in 0..nvox {
        let [i, j, k] = voxel_of(&dims, idx);
        let c = affine.voxel_to_world(&Vec3::new(i as f64, j as f64, k as f64));
        let mut tangents = Vec::new();
        for (b, bundle) in spec.bundles.iter().enumerate() {
            let proj = project_on_polyline(&centerlines[b], &cumulative[b], &c);
            if !proj.interior || proj.distance > bundle.radius {
                continue;
            }
            bundle_masks[b][idx] = 1.0;
            tangents.push(proj.tangent);
            let total = *cumulative[b].last().unwrap();
            let label = if proj.arc_pos < roi_depth {
                Some(bundle.head_roi)
            } else if proj.arc_pos > total - roi_depth {
                Some(bundle.tail_roi)
            } else {
                None
            };
            if let Some(label) = label {
                let prev = rois[idx] as u32;
                if prev != 0 && prev != label {
                    return Err(Error::OverlappingRois(prev, label, [i, j, k]));
                }
                rois[idx] = label as f32;
            }
        }
        peaks_per_voxel[idx] = merge_peaks(&tangents, merge_cos, spec.max_peaks);
    }

    let mut wm = vec![0f32; nvox];
    let mut fa = vec![0f32; nvox];
    let mut peaks = vec![0f32; nvox * 3 * spec.max_peaks];
    let mut fodf = vec![0f32; nvox * N_SH_COEFFS];
    let mut raw = vec![0f32; nvox * N_SPHERE_DIRECTIONS];
    let dirs = sphere_directions();
    for idx in 0..nvox {
        let p = &peaks_per_voxel[idx];
        if p.is_empty() {
            continue;
        }
        wm[idx] = 1.0;
        fa[idx] = if p.len() == 1 { FA_SINGLE } else { FA_CROSSING };
        for (n, v) in p.iter().enumerate() {
            let base = idx * 3 * spec.max_peaks + 3 * n;
            peaks[base] = v.x as f32;
            peaks[base + 1] = v.y as f32;
            peaks[base + 2] = v.z as f32;
        }
        let c = sh_project_peaks(p, spec.kappa)?;
        for (slot, v) in fodf[idx * N_SH_COEFFS..(idx + 1) * N_SH_COEFFS].iter_mut().zip(c) {
            *slot = v as f32;
        }
        let vals: Vec<f64> = dirs.iter().map(|d| lobe_sum(p, spec.kappa, d)).collect();
        let (lo, hi) = vals
            .iter()
            .fold((f64::MAX, f64::MIN), |(lo, hi), v| (lo.min(*v), hi.max(*v)));
        if hi > lo {
            for (slot, v) in raw[idx * N_SPHERE_DIRECTIONS..(idx + 1) * N_SPHERE_DIRECTIONS]
                .iter_mut()
                .zip(vals)
            {
                *slot = ((v - lo) / (hi - lo)) as f32;
            }
        }
    }

    let mut interface = vec![0f32; nvox];
    for idx in 0..nvox {
        if wm[idx] == 0.0 || rois[idx] != 0.0 {
            continue;
        }
        let [i, j, k] = voxel_of(&dims, idx);
        'search: for dk in -1i64..=1 {
            for dj in -1i64..=1 {
                for di in -1i64..=1 {
                    let (ni, nj, nk) = (i as i64 + di, j as i64 + dj, k as i64 + dk);
                    if ni < 0 || nj < 0 || nk < 0 {
                        continue;
                    }
                    let (ni, nj, nk) = (ni as usize, nj as usize, nk as usize);
                    if ni >= dims[0] || nj >= dims[1] || nk >= dims[2] {
                        continue;
                    }
                    if rois[linear_index(&dims, ni, nj, nk)] != 0.0 {
                        interface[idx] = 1.0;
                        break 'search;
                    }
                }
            }
        }
    }

    let scalar = |data: Vec<f32>| ScalarVolume::new(dims, data, affine.clone());
    Ok(Phantom {
        fodf: VectorVolume::new(dims, N_SH_COEFFS, fodf, affine.clone())?,
        raw_signal: VectorVolume::new(dims, N_SPHERE_DIRECTIONS, raw, affine.clone())?,
        peaks: PeaksVolume::new(dims, spec.max_peaks, peaks, affine.clone())?,
        wm_mask: scalar(wm)?,
        interface_mask: scalar(interface)?,
        fa: scalar(fa)?,
        rois: scalar(rois)?,
        gt_bundle_masks: bundle_masks.into_iter().map(scalar).collect::<Result<_>>()?,
        bundles: spec
            .bundles
            .iter()
            .zip(&centerlines)
            .map(|(b, pts)| BundleInfo {
                name: b.name.clone(),
                head_roi: b.head_roi,
                tail_roi: b.tail_roi,
                centerline: pts.iter().map(|p| [p.x, p.y, p.z]).collect(),
            })
            .collect(),
    })
}

/// Resamples a polyline to points exactly `step` mm apart along its length.
pub fn resample_polyline(points: &[Vec3], step: f64) -> Vec<Vec3> {
    if points.len() < 2 {
        return points.to_vec();
    }
    let mut out = vec![points[0]];
    let mut seg = 0;
    let mut cur = points[0];
    // walk along the polyline, intersecting a sphere of radius `step` around
    // the last emitted point with the remaining segments
    loop {
        let mut found = None;
        while seg < points.len() - 1 {
            let (a, b) = (points[seg], points[seg + 1]);
            let d = b - a;
            let f = a - cur;
            let qa = d.norm_squared();
            let qb = 2.0 * f.dot(&d);
            let qc = f.norm_squared() - step * step;
            let disc = qb * qb - 4.0 * qa * qc;
            if qa > 0.0 && disc >= 0.0 {
                let t = (-qb + disc.sqrt()) / (2.0 * qa);
                if (0.0..=1.0).contains(&t) {
                    found = Some(a + d * t);
                    break;
                }
            }
            seg += 1;
        }
        match found {
            Some(p) => {
                out.push(p);
                cur = p;
            }
            None => break,
        }
    }
    out
}

impl Phantom {
    /// Bundle centerlines resampled at `step` mm, usable as an oracle tractogram.
    pub fn centerline_streamlines(&self, step: f64) -> Vec<Vec<Vec3>> {
        self.bundles
            .iter()
            .map(|b| {
                let pts: Vec<Vec3> = b.centerline.iter().map(|p| Vec3::new(p[0], p[1], p[2])).collect();
                resample_polyline(&pts, step)
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn straight_spec() -> PhantomSpec {
        PhantomSpec {
            dims: [12, 5, 3],
            voxel_size: 2.0,
            origin: [0.0; 3],
            kappa: DEFAULT_KAPPA,
            max_peaks: 3,
            roi_depth: None,
            peak_merge_angle_deg: 20.0,
            bundles: vec![BundleSpec {
                name: "x".into(),
                radius: 2.5,
                head_roi: 1,
                tail_roi: 2,
                centerline: Centerline::Polyline {
                    points: vec![[1.0, 4.0, 2.0], [21.0, 4.0, 2.0]],
                },
            }],
        }
    }

    #[test]
    fn straight_bundle_has_single_x_peak() {
        let ph = generate_phantom(&straight_spec()).unwrap();
        let wm = ph.wm_mask.nonzero_voxels();
        assert!(!wm.is_empty());
        for [i, j, k] in wm {
            let p = ph.peaks.peaks_at_voxel(i, j, k);
            assert_eq!(p.len(), 1);
            assert!((p[0] - Vec3::x()).norm() < 1e-6);
            assert_eq!(ph.fa.get(i, j, k), FA_SINGLE);
        }
    }

    #[test]
    fn orthogonal_bundles_cross_with_two_peaks() {
        let ph = generate_phantom(&PhantomSpec::desk()).unwrap();
        let affine = ph.wm_mask.affine().clone();
        let v = affine.world_to_voxel(&Vec3::new(21.0, 21.0, 3.0));
        let (i, j, k) = (v.x as usize, v.y as usize, v.z as usize);
        let p = ph.peaks.peaks_at_voxel(i, j, k);
        assert_eq!(p.len(), 2);
        assert!(p[0].dot(&p[1]).abs() < 1e-9);
        assert_eq!(ph.fa.get(i, j, k), FA_CROSSING);
    }

    #[test]
    fn masks_nest() {
        let ph = generate_phantom(&PhantomSpec::desk()).unwrap();
        let wm = ph.wm_mask.data();
        for m in &ph.gt_bundle_masks {
            assert!(m.data().iter().zip(wm).all(|(b, w)| *b == 0.0 || *w != 0.0));
        }
        assert!(ph
            .interface_mask
            .data()
            .iter()
            .zip(wm)
            .all(|(i, w)| *i == 0.0 || *w != 0.0));
        assert!(ph.interface_mask.count_nonzero() > 0);
        // every ROI label appears
        for id in 1..=6 {
            assert!(ph.rois.data().iter().any(|v| *v as u32 == id), "missing ROI {id}");
        }
    }

    #[test]
    fn overlapping_rois_are_rejected() {
        let mut spec = straight_spec();
        let mut other = spec.bundles[0].clone();
        other.head_roi = 3;
        other.tail_roi = 4;
        spec.bundles.push(other);
        assert!(matches!(generate_phantom(&spec), Err(Error::OverlappingRois(..))));
    }

    #[test]
    fn bundle_outside_grid_is_rejected() {
        let mut spec = straight_spec();
        spec.bundles[0].centerline = Centerline::Polyline {
            points: vec![[1.0, 4.0, 2.0], [80.0, 4.0, 2.0]],
        };
        assert!(generate_phantom(&spec).is_err());
    }

    #[test]
    fn duplicate_roi_ids_are_rejected() {
        let mut spec = straight_spec();
        spec.bundles[0].tail_roi = 1;
        assert!(spec.validate().is_err());
    }

    #[test]
    fn resampled_centerlines_have_exact_spacing() {
        let ph = generate_phantom(&PhantomSpec::desk()).unwrap();
        for sl in ph.centerline_streamlines(0.75) {
            assert!(sl.len() > 30);
            for w in sl.windows(2) {
                assert!(((w[1] - w[0]).norm() - 0.75).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn spec_round_trips_through_toml() {
        let spec = PhantomSpec::desk();
        let text = toml::to_string(&spec).unwrap();
        let back: PhantomSpec = toml::from_str(&text).unwrap();
        assert_eq!(spec, back);
        assert!(toml::from_str::<PhantomSpec>(&format!("bogus = 1\n{text}")).is_err());
    }
}
