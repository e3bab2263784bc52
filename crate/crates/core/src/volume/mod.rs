//! Volumetric data: grids with a voxel-to-world affine, trilinear sampling,
//! spherical harmonics and the synthetic phantom.

mod affine;
mod grid;
pub mod io;
mod phantom;
pub mod sh;
mod sphere;

pub use affine::AffineTransform;
pub use grid::{linear_index, voxel_of, Dims, PeaksVolume, ScalarVolume, VectorVolume};
pub use phantom::{
    generate_phantom, resample_polyline, BundleInfo, BundleSpec, Centerline, Phantom, PhantomSpec, FA_CROSSING,
    FA_SINGLE,
};
pub use sh::{sh_basis, sh_evaluate, sh_project_peaks, N_SH_COEFFS};
pub use sphere::{sphere_directions, N_SPHERE_DIRECTIONS};

/// Default threshold on the interpolated WM mask below which a position is
/// considered outside the tracking domain.
pub const DEFAULT_MASK_THRESHOLD: f64 = 0.1;
