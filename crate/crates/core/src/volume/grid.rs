use crate::{Error, Result, Vec3};

use super::AffineTransform;

pub type Dims = [usize; 3];

pub(crate) fn voxel_count(dims: &Dims) -> usize {
    dims[0] * dims[1] * dims[2]
}

/// Linear voxel index, x fastest.
#[inline]
pub fn linear_index(dims: &Dims, i: usize, j: usize, k: usize) -> usize {
    i + dims[0] * (j + dims[1] * k)
}

/// Inverse of [`linear_index`].
#[inline]
pub fn voxel_of(dims: &Dims, idx: usize) -> [usize; 3] {
    let i = idx % dims[0];
    let j = (idx / dims[0]) % dims[1];
    let k = idx / (dims[0] * dims[1]);
    [i, j, k]
}

/// Multi-channel grid. Channels of one voxel are contiguous; voxels are laid
/// out x fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorVolume {
    dims: Dims,
    channels: usize,
    data: Vec<f32>,
    affine: AffineTransform,
}

impl VectorVolume {
    pub fn new(dims: Dims, channels: usize, data: Vec<f32>, affine: AffineTransform) -> Result<Self> {
        if dims.contains(&0) || channels == 0 {
            return Err(Error::InvalidVolume(format!(
                "dims {dims:?} and channels {channels} must be positive"
            )));
        }
        let expected = voxel_count(&dims) * channels;
        if data.len() != expected {
            return Err(Error::InvalidVolume(format!(
                "data length {} != {expected}",
                data.len()
            )));
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidVolume(format!("non-finite value at {pos}")));
        }
        Ok(Self {
            dims,
            channels,
            data,
            affine,
        })
    }

    pub fn zeros(dims: Dims, channels: usize, affine: AffineTransform) -> Result<Self> {
        Self::new(dims, channels, vec![0.0; voxel_count(&dims) * channels], affine)
    }

    pub fn dims(&self) -> Dims {
        self.dims
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn affine(&self) -> &AffineTransform {
        &self.affine
    }

    pub fn voxel(&self, i: usize, j: usize, k: usize) -> &[f32] {
        let base = linear_index(&self.dims, i, j, k) * self.channels;
        &self.data[base..base + self.channels]
    }

    pub fn voxel_mut(&mut self, i: usize, j: usize, k: usize) -> &mut [f32] {
        let base = linear_index(&self.dims, i, j, k) * self.channels;
        &mut self.data[base..base + self.channels]
    }

    pub fn into_data(self) -> Vec<f32> {
        self.data
    }

    /// Trilinear interpolation at a world position.
    ///
    /// Voxel centres sit at integer voxel coordinates. Corners that fall
    /// outside the grid contribute zero, so positions more than one voxel
    /// beyond the grid sample as all zeros.
    pub fn sample_into(&self, p_world: &Vec3, out: &mut [f64]) {
        debug_assert_eq!(out.len(), self.channels);
        out.iter_mut().for_each(|v| *v = 0.0);
        let x = self.affine.world_to_voxel(p_world);
        let base = [x.x.floor(), x.y.floor(), x.z.floor()];
        if base.iter().any(|b| !b.is_finite()) {
            return;
        }
        let frac = [x.x - base[0], x.y - base[1], x.z - base[2]];
        for corner in 0..8usize {
            let mut w = 1.0;
            let mut idx = [0usize; 3];
            let mut inside = true;
            for axis in 0..3 {
                let hi = (corner >> axis) & 1 == 1;
                let c = base[axis] + if hi { 1.0 } else { 0.0 };
                w *= if hi { frac[axis] } else { 1.0 - frac[axis] };
                if c < 0.0 || c >= self.dims[axis] as f64 {
                    inside = false;
                    break;
                }
                idx[axis] = c as usize;
            }
            if !inside || w == 0.0 {
                continue;
            }
            let vals = self.voxel(idx[0], idx[1], idx[2]);
            for (o, &v) in out.iter_mut().zip(vals) {
                *o += w * v as f64;
            }
        }
    }

    pub fn sample(&self, p_world: &Vec3) -> Vec<f64> {
        let mut out = vec![0.0; self.channels];
        self.sample_into(p_world, &mut out);
        out
    }

    /// Index of the voxel whose centre is nearest to `p_world`, if inside.
    pub fn nearest_voxel(&self, p_world: &Vec3) -> Option<[usize; 3]> {
        nearest_voxel(&self.dims, &self.affine, p_world)
    }
}

pub(crate) fn nearest_voxel(dims: &Dims, affine: &AffineTransform, p: &Vec3) -> Option<[usize; 3]> {
    let x = affine.world_to_voxel(p);
    let mut out = [0usize; 3];
    for axis in 0..3 {
        let r = x[axis].round();
        if !(r >= 0.0 && r < dims[axis] as f64) {
            return None;
        }
        out[axis] = r as usize;
    }
    Some(out)
}

/// Single-channel grid (masks, FA, label maps).
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarVolume(VectorVolume);

impl ScalarVolume {
    pub fn new(dims: Dims, data: Vec<f32>, affine: AffineTransform) -> Result<Self> {
        VectorVolume::new(dims, 1, data, affine).map(Self)
    }

    pub fn zeros(dims: Dims, affine: AffineTransform) -> Result<Self> {
        VectorVolume::zeros(dims, 1, affine).map(Self)
    }

    pub fn from_vector(v: VectorVolume) -> Result<Self> {
        if v.channels() != 1 {
            return Err(Error::InvalidVolume(format!(
                "expected 1 channel, got {}",
                v.channels()
            )));
        }
        Ok(Self(v))
    }

    pub fn as_vector(&self) -> &VectorVolume {
        &self.0
    }

    pub fn dims(&self) -> Dims {
        self.0.dims
    }

    pub fn affine(&self) -> &AffineTransform {
        &self.0.affine
    }

    pub fn data(&self) -> &[f32] {
        &self.0.data
    }

    pub fn get(&self, i: usize, j: usize, k: usize) -> f32 {
        self.0.data[linear_index(&self.0.dims, i, j, k)]
    }

    pub fn set(&mut self, i: usize, j: usize, k: usize, v: f32) {
        let idx = linear_index(&self.0.dims, i, j, k);
        self.0.data[idx] = v;
    }

    pub fn sample(&self, p_world: &Vec3) -> f64 {
        let mut out = [0.0];
        self.0.sample_into(p_world, &mut out);
        out[0]
    }

    /// Value of the nearest voxel; zero outside the grid.
    pub fn nearest(&self, p_world: &Vec3) -> f32 {
        self.0
            .nearest_voxel(p_world)
            .map(|[i, j, k]| self.get(i, j, k))
            .unwrap_or(0.0)
    }

    pub fn nearest_voxel(&self, p_world: &Vec3) -> Option<[usize; 3]> {
        self.0.nearest_voxel(p_world)
    }

    /// Indices of voxels with a nonzero value.
    pub fn nonzero_voxels(&self) -> Vec<[usize; 3]> {
        self.0
            .data
            .iter()
            .enumerate()
            .filter(|(_, v)| **v != 0.0)
            .map(|(idx, _)| voxel_of(&self.0.dims, idx))
            .collect()
    }

    pub fn count_nonzero(&self) -> usize {
        self.0.data.iter().filter(|v| **v != 0.0).count()
    }
}

/// Up to `max_peaks` unit directions per voxel, zero-padded.
#[derive(Debug, Clone, PartialEq)]
pub struct PeaksVolume {
    max_peaks: usize,
    inner: VectorVolume,
}

impl PeaksVolume {
    pub fn new(dims: Dims, max_peaks: usize, data: Vec<f32>, affine: AffineTransform) -> Result<Self> {
        if max_peaks == 0 || max_peaks > 5 {
            return Err(Error::InvalidVolume(format!(
                "max_peaks {max_peaks} must be in 1..=5"
            )));
        }
        let inner = VectorVolume::new(dims, 3 * max_peaks, data, affine)?;
        for chunk in inner.data.chunks_exact(3) {
            let n = (chunk[0] as f64).hypot(chunk[1] as f64).hypot(chunk[2] as f64);
            if n != 0.0 && (n - 1.0).abs() > 1e-6 {
                return Err(Error::InvalidVolume(format!(
                    "stored peak has norm {n}, expected 1"
                )));
            }
        }
        Ok(Self { max_peaks, inner })
    }

    pub fn from_vector(v: VectorVolume) -> Result<Self> {
        if !v.channels().is_multiple_of(3) {
            return Err(Error::InvalidVolume(format!(
                "peak volume channels {} not a multiple of 3",
                v.channels()
            )));
        }
        let k = v.channels() / 3;
        let (dims, affine, data) = (v.dims, v.affine.clone(), v.data);
        Self::new(dims, k, data, affine)
    }

    pub fn as_vector(&self) -> &VectorVolume {
        &self.inner
    }

    pub fn max_peaks(&self) -> usize {
        self.max_peaks
    }

    pub fn dims(&self) -> Dims {
        self.inner.dims
    }

    pub fn affine(&self) -> &AffineTransform {
        &self.inner.affine
    }

    /// Nonzero peaks stored at a voxel.
    pub fn peaks_at_voxel(&self, i: usize, j: usize, k: usize) -> Vec<Vec3> {
        self.inner
            .voxel(i, j, k)
            .chunks_exact(3)
            .map(|c| Vec3::new(c[0] as f64, c[1] as f64, c[2] as f64))
            .filter(|v| v.norm_squared() > 0.0)
            .collect()
    }

    /// Peaks of the voxel nearest to `p_world`; empty outside the grid.
    pub fn peaks_at(&self, p_world: &Vec3) -> Vec<Vec3> {
        match self.inner.nearest_voxel(p_world) {
            Some([i, j, k]) => self.peaks_at_voxel(i, j, k),
            None => Vec::new(),
        }
    }
}
