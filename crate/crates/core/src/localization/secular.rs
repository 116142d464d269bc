//! Unit-norm linear least squares `min ||V n - p||` subject to `||n|| = 1`.
//!
//! With the SVD `V = U S W^T` and `h = S U^T p`, the stationary points are
//! `n(l) = W diag(1/(s_j^2 + l)) h` and the multiplier is the root of
//! `phi(l) = sum h_j^2 / (s_j^2 + l)^2 - 1`, strictly decreasing on
//! `(-s_min^2, inf)`.

use alloc::vec::Vec;
use nalgebra::{DVector, Dyn, OMatrix, U3};

use super::{design_matrix, LocalizationError, RssEntry, RssVector};
use crate::geometry::Vec3;
use crate::optical::VcselAnchor;

const RANK_TOLERANCE: f64 = 1e-12;
const PHI_TOLERANCE: f64 = 1e-12;

/// The secular equation of one orientation subproblem.
pub struct Secular {
    s2: [f64; 3],
    h: [f64; 3],
    w: nalgebra::Matrix3<f64>,
}

impl Secular {
    /// Built from the usable readings at position `r`.
    pub fn at(
        r: &Vec3,
        anchors: &[VcselAnchor],
        measurements: &RssVector,
        pd_area: f64,
    ) -> Result<Self, LocalizationError> {
        let entries: Vec<RssEntry> = measurements.usable_all().copied().collect();
        let (v, p) = design_matrix(r, anchors, &entries, pd_area);
        Self::new(&v, &p)
    }

    pub(crate) fn new(v: &OMatrix<f64, Dyn, U3>, p: &DVector<f64>) -> Result<Self, LocalizationError> {
        if v.nrows() < 3 {
            return Err(LocalizationError::TooFewMeasurements { needed: 3, have: v.nrows() });
        }
        let svd = v.clone().svd(true, true);
        let u = svd.u.as_ref().ok_or(LocalizationError::RankDeficient)?;
        let wt = svd.v_t.ok_or(LocalizationError::RankDeficient)?;
        let s = svd.singular_values;
        let smax = s.max();
        let smin = s.min();
        if !(smin > RANK_TOLERANCE * smax) {
            return Err(LocalizationError::RankDeficient);
        }
        let c = u.transpose() * p;
        let mut s2 = [0.0; 3];
        let mut h = [0.0; 3];
        for j in 0..3 {
            s2[j] = s[j] * s[j];
            h[j] = s[j] * c[j];
        }
        let w = wt.transpose().fixed_view::<3, 3>(0, 0).into_owned();
        Ok(Self { s2, h, w })
    }

    fn s2_min(&self) -> f64 {
        self.s2.iter().copied().fold(f64::INFINITY, f64::min)
    }

    fn s2_max(&self) -> f64 {
        self.s2.iter().copied().fold(0.0, f64::max)
    }

    pub fn phi(&self, l: f64) -> f64 {
        let mut acc = 0.0;
        for j in 0..3 {
            let q = self.h[j] / (self.s2[j] + l);
            acc += q * q;
        }
        acc - 1.0
    }

    fn dphi(&self, l: f64) -> f64 {
        let mut acc = 0.0;
        for j in 0..3 {
            let den = self.s2[j] + l;
            acc += self.h[j] * self.h[j] / (den * den * den);
        }
        -2.0 * acc
    }

    /// Lower end of the admissible interval.
    pub fn pole(&self) -> f64 {
        -self.s2_min()
    }

    pub fn normal(&self, l: f64) -> Vec3 {
        let mut y = Vec3::zeros();
        for j in 0..3 {
            y[j] = self.h[j] / (self.s2[j] + l);
        }
        self.w * y
    }

    /// Bracket, bisect, then one guarded Newton step.
    pub fn root(&self) -> Result<f64, LocalizationError> {
        let pole = self.pole();
        let scale = self.s2_max();
        let mut lo = pole + 1e-9 * scale;
        // Approach the pole further if the first trial point is already past
        // the root; a root that close means near-hard-case data.
        let mut tries = 0;
        while self.phi(lo) <= 0.0 {
            let next = pole + (lo - pole) * 1e-3;
            if next <= pole || tries > 8 {
                return Err(LocalizationError::NoUnitNormSolution);
            }
            lo = next;
            tries += 1;
        }
        let mut step = scale.max(f64::MIN_POSITIVE);
        let mut hi = lo.max(0.0) + step;
        let mut grow = 0;
        while self.phi(hi) > 0.0 {
            step *= 2.0;
            hi = lo.max(0.0) + step;
            grow += 1;
            if grow > 2000 {
                return Err(LocalizationError::NoUnitNormSolution);
            }
        }
        let mut mid = 0.5 * (lo + hi);
        for _ in 0..300 {
            mid = 0.5 * (lo + hi);
            let f = self.phi(mid);
            if f.abs() < PHI_TOLERANCE || mid <= lo || mid >= hi {
                break;
            }
            if f > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let f = self.phi(mid);
        let newton = mid - f / self.dphi(mid);
        if newton > lo && newton < hi && self.phi(newton).abs() <= f.abs() {
            mid = newton;
        }
        Ok(mid)
    }
}

/// Solve for the orientation with `V(r)` built from the usable readings. Returns the unit normal and the multiplier.
pub fn solve_orientation_given_position(
    r: &Vec3,
    anchors: &[VcselAnchor],
    measurements: &RssVector,
    pd_area: f64,
) -> Result<(Vec3, f64), LocalizationError> {
    let entries: Vec<RssEntry> = measurements.usable_all().copied().collect();
    let (v, p) = design_matrix(r, anchors, &entries, pd_area);
    orientation_from_design(&v, &p)
}

pub(crate) fn orientation_from_design(
    v: &OMatrix<f64, Dyn, U3>,
    p: &DVector<f64>,
) -> Result<(Vec3, f64), LocalizationError> {
    let sec = Secular::new(v, p)?;
    let l = sec.root()?;
    Ok((sec.normal(l).normalize(), l))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::localization::rss_forward_model;
    use crate::optical::BeamMode;

    fn anchors() -> Vec<VcselAnchor> {
        let m = BeamMode::new(10e-3, 5.6e-6, 950e-9);
        [(0.0, 4.875, 1.375), (0.0, 5.125, 1.375), (0.0, 5.125, 1.625), (0.0, 4.875, 1.625), (0.0, 5.0, 1.625)]
            .iter()
            .enumerate()
            .map(|(i, &(x, y, z))| VcselAnchor {
                position: Vec3::new(x, y, z),
                boresight: Vec3::x(),
                modes: alloc::vec![m],
                tone_id: i as u32,
            })
            .collect()
    }

    #[test]
    fn noiseless_round_trip() {
        let a = anchors();
        let r = Vec3::new(3.0, 4.0, 1.5);
        let n = Vec3::new(-0.9, 0.3, 0.1).normalize();
        let p = rss_forward_model(&r, &n, &a, 1e-4);
        let (nh, _) = solve_orientation_given_position(&r, &a, &p, 1e-4).unwrap();
        assert!((nh - n).norm() < 1e-9, "{}", (nh - n).norm());
    }

    #[test]
    fn scaled_measurements_keep_direction_sign() {
        let a = anchors();
        let r = Vec3::new(3.0, 4.0, 1.5);
        let n = Vec3::new(-0.9, 0.3, 0.1).normalize();
        let mut p = rss_forward_model(&r, &n, &a, 1e-4);
        for e in &mut p.entries {
            e.power *= 3.7;
        }
        let (nh, _) = solve_orientation_given_position(&r, &a, &p, 1e-4).unwrap();
        assert!((nh.norm() - 1.0).abs() < 1e-10);
        assert!(nh.dot(&n) > 0.0);
    }

    #[test]
    fn duplicate_rows_are_rank_deficient() {
        let mut v = OMatrix::<f64, Dyn, U3>::zeros(3);
        v.row_mut(0).copy_from_slice(&[1.0, 2.0, 0.5]);
        v.row_mut(1).copy_from_slice(&[1.0, 2.0, 0.5]);
        v.row_mut(2).copy_from_slice(&[0.0, 1.0, -1.0]);
        let p = DVector::from_vec(alloc::vec![1.0, 1.0, 0.3]);
        assert_eq!(orientation_from_design(&v, &p), Err(LocalizationError::RankDeficient));
    }
}
