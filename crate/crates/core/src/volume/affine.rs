use nalgebra::{Matrix3, Matrix4, Vector3};
use serde::{Deserialize, Serialize};

use crate::{Error, Result, Vec3};

/// Voxel-index to world-millimetre mapping.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[f64; 16]", into = "[f64; 16]")]
pub struct AffineTransform {
    matrix: Matrix4<f64>,
    linear_inv: Matrix3<f64>,
}

impl AffineTransform {
    pub fn new(matrix: Matrix4<f64>) -> Result<Self> {
        let linear: Matrix3<f64> = matrix.fixed_view::<3, 3>(0, 0).into_owned();
        let det = linear.determinant();
        let scale = linear.norm().max(f64::MIN_POSITIVE);
        if !det.is_finite() || det.abs() <= 1e-12 * scale.powi(3) {
            return Err(Error::SingularAffine(det));
        }
        let linear_inv = linear.try_inverse().ok_or(Error::SingularAffine(det))?;
        Ok(Self { matrix, linear_inv })
    }

    pub fn identity() -> Self {
        Self::new(Matrix4::identity()).expect("identity is invertible")
    }

    /// Isotropic voxels of `size` mm with voxel (0,0,0) at `origin`.
    pub fn scaled(size: f64, origin: Vec3) -> Result<Self> {
        let mut m = Matrix4::identity();
        for i in 0..3 {
            m[(i, i)] = size;
            m[(i, 3)] = origin[i];
        }
        Self::new(m)
    }

    /// Row-major 16 entries.
    pub fn from_row_major(entries: &[f64; 16]) -> Result<Self> {
        Self::new(Matrix4::from_row_slice(entries))
    }

    pub fn to_row_major(&self) -> [f64; 16] {
        let mut out = [0.0; 16];
        for r in 0..4 {
            for c in 0..4 {
                out[r * 4 + c] = self.matrix[(r, c)];
            }
        }
        out
    }

    pub fn matrix(&self) -> &Matrix4<f64> {
        &self.matrix
    }

    pub fn voxel_to_world(&self, ijk: &Vec3) -> Vec3 {
        let lin = self.matrix.fixed_view::<3, 3>(0, 0);
        let t = self.matrix.fixed_view::<3, 1>(0, 3);
        lin * ijk + t
    }

    pub fn world_to_voxel(&self, p: &Vec3) -> Vec3 {
        let t: Vector3<f64> = self.matrix.fixed_view::<3, 1>(0, 3).into_owned();
        self.linear_inv * (p - t)
    }

    /// Length in mm of one voxel step along each index axis.
    pub fn voxel_sizes(&self) -> Vec3 {
        let lin = self.matrix.fixed_view::<3, 3>(0, 0);
        Vec3::new(
            lin.column(0).norm(),
            lin.column(1).norm(),
            lin.column(2).norm(),
        )
    }

    /// Geometric mean voxel edge, used for step-size rescaling.
    pub fn mean_voxel_size(&self) -> f64 {
        let s = self.voxel_sizes();
        (s.x * s.y * s.z).cbrt()
    }
}

impl TryFrom<[f64; 16]> for AffineTransform {
    type Error = Error;
    fn try_from(v: [f64; 16]) -> Result<Self> {
        Self::from_row_major(&v)
    }
}

impl From<AffineTransform> for [f64; 16] {
    fn from(a: AffineTransform) -> Self {
        a.to_row_major()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    #[test]
    fn identity_maps_points_to_themselves() {
        let a = AffineTransform::identity();
        let p = Vec3::new(1.5, -2.0, 7.25);
        assert_eq!(a.voxel_to_world(&p), p);
        assert_eq!(a.world_to_voxel(&p), p);
    }

    #[test]
    fn three_mm_scaling() {
        let a = AffineTransform::scaled(3.0, Vec3::zeros()).unwrap();
        assert_eq!(a.voxel_to_world(&Vec3::new(1.0, 1.0, 1.0)), Vec3::new(3.0, 3.0, 3.0));
        assert_eq!(a.voxel_sizes(), Vec3::new(3.0, 3.0, 3.0));
    }

    #[test]
    fn singular_affine_is_rejected() {
        let mut m = Matrix4::identity();
        m[(2, 2)] = 0.0;
        assert!(matches!(
            AffineTransform::new(m),
            Err(Error::SingularAffine(_))
        ));
    }

    #[test]
    fn random_affine_round_trip() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for _ in 0..100 {
            let mut m = Matrix4::identity();
            for r in 0..3 {
                for c in 0..4 {
                    m[(r, c)] = rng.random_range(-4.0..4.0);
                }
                m[(r, r)] += 5.0;
            }
            let a = AffineTransform::new(m).unwrap();
            // independent route: full 4x4 numeric inverse
            let inv = m.try_inverse().unwrap();
            let ijk = Vec3::new(
                rng.random_range(-10.0..50.0),
                rng.random_range(-10.0..50.0),
                rng.random_range(-10.0..50.0),
            );
            let w = a.voxel_to_world(&ijk);
            let back = a.world_to_voxel(&w);
            assert!((back - ijk).norm() < 1e-9);
            let h = inv * nalgebra::Vector4::new(w.x, w.y, w.z, 1.0);
            assert!((Vec3::new(h.x, h.y, h.z) - ijk).norm() < 1e-9);
        }
    }
}
