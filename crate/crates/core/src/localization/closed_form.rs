//! Dual-mode ranging, trilateration and the range-error model.

use nalgebra::{Matrix2, Matrix3, Vector2};
use num_traits::Float;

use super::{beta, LocalizationError};
use crate::geometry::{Aabb, Vec3};
use crate::optical::BeamMode;

/// Range from the power ratio of two modes with different Rayleigh ranges.
///
/// The ratio normalised by the two peak scales is
/// `R = (1 + d^2/zb^2) / (1 + d^2/za^2)`, which inverts to
/// `d^2 = (1 - R) za^2 zb^2 / (R zb^2 - za^2)`.
pub fn dual_mode_range(
    p_a: f64,
    p_b: f64,
    mode_a: &BeamMode,
    mode_b: &BeamMode,
    pd_area: f64,
) -> Result<f64, LocalizationError> {
    let za = mode_a.rayleigh_range();
    let zb = mode_b.rayleigh_range();
    if (za - zb).abs() < 1e-9 * za {
        return Err(LocalizationError::DegenerateModes);
    }
    if !(p_a > 0.0 && p_b > 0.0) {
        return Err(LocalizationError::OutOfDomain);
    }
    let ratio = (p_a / p_b) * (mode_b.peak_scale(pd_area) / mode_a.peak_scale(pd_area));
    let (za2, zb2) = (za * za, zb * zb);
    let num = (1.0 - ratio) * za2 * zb2;
    let den = ratio * zb2 - za2;
    let d2 = num / den;
    if !(d2 >= 0.0) || !d2.is_finite() {
        return Err(LocalizationError::OutOfDomain);
    }
    Ok(d2.sqrt())
}

/// Position from three ranges. Works in coordinates relative to the first
/// anchor; the line where the two difference planes meet is intersected
/// with the first sphere and the root inside `region` is returned.
pub fn trilaterate(anchors: &[Vec3; 3], ranges: &[f64; 3], region: &Aabb) -> Result<Vec3, LocalizationError> {
    let a = anchors[1] - anchors[0];
    let b = anchors[2] - anchors[0];
    let w = a.cross(&b);
    if w.norm() <= 1e-12 * a.norm() * b.norm() {
        return Err(LocalizationError::CollinearAnchors);
    }
    let (d1, d2, d3) = (ranges[0], ranges[1], ranges[2]);
    // 2 a.r = |a|^2 - (d2^2 - d1^2), likewise for b
    let rhs = Vector2::new(
        0.5 * (a.norm_squared() - (d2 * d2 - d1 * d1)),
        0.5 * (b.norm_squared() - (d3 * d3 - d1 * d1)),
    );
    let gram = Matrix2::new(a.dot(&a), a.dot(&b), a.dot(&b), b.dot(&b));
    let coef = gram
        .lu()
        .solve(&rhs)
        .ok_or(LocalizationError::CollinearAnchors)?;
    let r0 = a * coef[0] + b * coef[1];
    let w = w.normalize();
    let mut disc = d1 * d1 - r0.norm_squared();
    if disc < 0.0 {
        if disc < -1e-9 * d1 * d1 {
            return Err(LocalizationError::NoRealIntersection);
        }
        disc = 0.0;
    }
    let t = disc.sqrt();
    let plus = anchors[0] + r0 + w * t;
    let minus = anchors[0] + r0 - w * t;
    match (region.contains(&plus), region.contains(&minus)) {
        (true, true) if t > 0.0 => Err(LocalizationError::AmbiguousSolution),
        (true, _) => Ok(plus),
        (false, true) => Ok(minus),
        (false, false) => Err(LocalizationError::NoFeasibleRoot),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrientationSolution {
    pub normal: Vec3,
    /// `| ||U^-1 c|| - 1 |` before renormalisation.
    pub norm_residual: f64,
}

/// Orientation from three primary-mode powers once the position is known:
/// `U n = c` with rows `u_i^T` and `c_i = P_i / beta_i(d_i)`.
pub fn orientation_from_ranges(
    position: &Vec3,
    anchors: &[Vec3; 3],
    powers: &[f64; 3],
    modes: &[BeamMode; 3],
    ranges: &[f64; 3],
    pd_area: f64,
) -> Result<OrientationSolution, LocalizationError> {
    let mut u = Matrix3::zeros();
    let mut c = Vec3::zeros();
    for i in 0..3 {
        let dir = (anchors[i] - position).normalize();
        u.set_row(i, &dir.transpose());
        c[i] = powers[i] / beta(&modes[i], pd_area, ranges[i]);
    }
    if u.determinant().abs() < 1e-12 {
        return Err(LocalizationError::SingularDirectionMatrix);
    }
    let n = u
        .lu()
        .solve(&c)
        .ok_or(LocalizationError::SingularDirectionMatrix)?;
    let norm = n.norm();
    Ok(OrientationSolution { normal: n / norm, norm_residual: (norm - 1.0).abs() })
}

fn radicand(d: f64, alpha: f64, z: f64) -> f64 {
    alpha - (z / d) * (z / d)
}

/// Ranging bias `d - d_hat` for SNR `alpha = P_LoS / P_n`.
///
/// Evaluated as `d (1 - s^2) / (1 + s)` with
/// `s^2 = (alpha - z^2/d^2)/(1 + alpha)`, which avoids cancelling when
/// `alpha` is large.
pub fn range_error(d: f64, alpha: f64, z_r: f64) -> Result<f64, LocalizationError> {
    let rad = radicand(d, alpha, z_r);
    if !(rad >= 0.0) || d <= z_r {
        return Err(LocalizationError::OutOfDomain);
    }
    let s2 = rad / (1.0 + alpha);
    let one_minus_s2 = (1.0 + (z_r / d) * (z_r / d)) / (1.0 + alpha);
    Ok(d * one_minus_s2 / (1.0 + s2.sqrt()))
}

/// Estimated range `sqrt((alpha d^2 - z^2) / (alpha + 1))`.
pub fn estimated_distance(d: f64, alpha: f64, z_r: f64) -> Result<f64, LocalizationError> {
    let num = alpha * d * d - z_r * z_r;
    if !(num >= 0.0) {
        return Err(LocalizationError::OutOfDomain);
    }
    Ok((num / (alpha + 1.0)).sqrt())
}
