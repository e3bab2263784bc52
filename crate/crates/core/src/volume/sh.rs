//! Real, even-order spherical harmonics up to order 6.
//!
//! Coefficient `j` for degree `l` and order `m` (m in -l..=l) lives at
//! `l(l+1)/2 + m`, giving 1 + 5 + 9 + 13 = 28 coefficients. The basis is
//! orthonormal on the sphere; `m > 0` uses cosines and `m < 0` sines.

use std::f64::consts::PI;
use std::sync::OnceLock;

use crate::{Error, Result, Vec3};

pub const SH_ORDER: usize = 6;
pub const N_SH_COEFFS: usize = 28;

/// Default lobe sharpness for synthetic fODFs.
pub const DEFAULT_KAPPA: f64 = 30.0;

#[inline]
pub fn sh_index(l: usize, m: i64) -> usize {
    ((l * (l + 1) / 2) as i64 + m) as usize
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

/// Associated Legendre P_l^m(x), m >= 0, without the Condon-Shortley phase.
fn assoc_legendre(l: usize, m: usize, x: f64) -> f64 {
    let mut pmm = 1.0;
    if m > 0 {
        let s = (1.0 - x * x).max(0.0).sqrt();
        let mut fact = 1.0;
        for _ in 0..m {
            pmm *= fact * s;
            fact += 2.0;
        }
    }
    if l == m {
        return pmm;
    }
    let mut pmmp1 = x * (2 * m + 1) as f64 * pmm;
    if l == m + 1 {
        return pmmp1;
    }
    let mut pll = 0.0;
    for ll in (m + 2)..=l {
        pll = ((2 * ll - 1) as f64 * x * pmmp1 - (ll + m - 1) as f64 * pmm) / (ll - m) as f64;
        pmm = pmmp1;
        pmmp1 = pll;
    }
    pll
}

/// Evaluates the 28 basis functions at a (not necessarily unit) direction.
pub fn sh_basis(dir: &Vec3) -> [f64; N_SH_COEFFS] {
    let u = dir.normalize();
    let cos_theta = u.z.clamp(-1.0, 1.0);
    let phi = u.y.atan2(u.x);
    let mut out = [0.0; N_SH_COEFFS];
    for l in (0..=SH_ORDER).step_by(2) {
        for m in 0..=l {
            let norm = ((2 * l + 1) as f64 / (4.0 * PI) * factorial(l - m) / factorial(l + m)).sqrt();
            let p = norm * assoc_legendre(l, m, cos_theta);
            if m == 0 {
                out[sh_index(l, 0)] = p;
            } else {
                let mf = m as f64;
                out[sh_index(l, m as i64)] = std::f64::consts::SQRT_2 * p * (mf * phi).cos();
                out[sh_index(l, -(m as i64))] = std::f64::consts::SQRT_2 * p * (mf * phi).sin();
            }
        }
    }
    out
}

/// Evaluates an SH expansion in direction `dir`.
pub fn sh_evaluate(coeffs: &[f64], dir: &Vec3) -> f64 {
    sh_basis(dir).iter().zip(coeffs).map(|(b, c)| b * c).sum()
}

/// Lobe profile of one fibre population: exp(κ(t² − 1)) with t = ⟨u, v⟩.
#[inline]
pub fn lobe(kappa: f64, cos_angle: f64) -> f64 {
    (kappa * (cos_angle * cos_angle - 1.0)).exp()
}

/// Sum of lobes over peaks, evaluated in direction `u`.
pub fn lobe_sum(peaks: &[Vec3], kappa: f64, u: &Vec3) -> f64 {
    let u = u.normalize();
    peaks.iter().map(|v| lobe(kappa, u.dot(&v.normalize()))).sum()
}

fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

fn legendre(l: usize, x: f64) -> f64 {
    assoc_legendre(l, 0, x)
}

/// Funk-Hecke eigenvalues 2π ∫ g(t) P_l(t) dt of the lobe kernel, one per
/// even degree.
fn lobe_eigenvalues(kappa: f64) -> [f64; SH_ORDER / 2 + 1] {
    static NODES: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    let (nodes, weights) = NODES.get_or_init(|| gauss_legendre(200));
    let mut out = [0.0; SH_ORDER / 2 + 1];
    for (slot, l) in out.iter_mut().zip((0..=SH_ORDER).step_by(2)) {
        *slot = 2.0
            * PI
            * nodes
                .iter()
                .zip(weights)
                .map(|(&t, &w)| w * lobe(kappa, t) * legendre(l, t))
                .sum::<f64>();
    }
    out
}

/// Projects the lobe sum of `peaks` onto the order-6 even SH basis.
///
/// The projection is the continuous L2 least-squares fit over the sphere,
/// computed exactly per peak through the Funk-Hecke theorem, so it inherits
/// the rotational symmetry of the lobes.
pub fn sh_project_peaks(peaks: &[Vec3], kappa: f64) -> Result<[f64; N_SH_COEFFS]> {
    if !(kappa > 0.0 && kappa.is_finite()) {
        return Err(Error::InvalidConfig(format!("kappa must be > 0, got {kappa}")));
    }
    if peaks.is_empty() {
        return Err(Error::InvalidConfig("at least one peak is required".into()));
    }
    let lambda = lobe_eigenvalues(kappa);
    let mut out = [0.0; N_SH_COEFFS];
    for v in peaks {
        let basis = sh_basis(v);
        for l in (0..=SH_ORDER).step_by(2) {
            for m in -(l as i64)..=(l as i64) {
                let j = sh_index(l, m);
                out[j] += lambda[l / 2] * basis[j];
            }
        }
    }
    Ok(out)
}
