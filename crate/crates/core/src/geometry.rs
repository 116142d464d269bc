//! Vectors, boxes and segments, plus the exact line-of-sight oracle.
//!
//! Everything here is in meters. Obstacles are axis-aligned boxes.

use num_traits::Float;

/// Positions and directions. Directions are expected to be unit-norm
/// wherever a function says so.
pub type Vec3 = nalgebra::Vector3<f64>;

/// Axis-aligned box, `min <= max` componentwise.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Aabb {
    pub min: Vec3,
    pub max: Vec3,
}

impl Aabb {
    pub fn new(min: Vec3, max: Vec3) -> Self {
        debug_assert!(
            min.x <= max.x && min.y <= max.y && min.z <= max.z,
            "Aabb corners out of order"
        );
        Self { min, max }
    }

    /// Box from its minimum corner and edge lengths.
    pub fn from_corner(min: Vec3, size: Vec3) -> Self {
        Self::new(min, min + size)
    }

    pub fn center(&self) -> Vec3 {
        (self.min + self.max) * 0.5
    }

    pub fn size(&self) -> Vec3 {
        self.max - self.min
    }

    /// Closed containment test.
    pub fn contains(&self, p: &Vec3) -> bool {
        (0..3).all(|a| p[a] >= self.min[a] && p[a] <= self.max[a])
    }

    /// Same box grown by `margin` on every side.
    pub fn expanded(&self, margin: f64) -> Self {
        let m = Vec3::repeat(margin);
        Self { min: self.min - m, max: self.max + m }
    }

    /// Do the two closed boxes share any point?
    pub fn overlaps(&self, other: &Aabb) -> bool {
        (0..3).all(|a| self.min[a] <= other.max[a] && other.min[a] <= self.max[a])
    }

    /// Distance from `p` to the box surface (zero on the boundary).
    pub fn surface_distance(&self, p: &Vec3) -> f64 {
        if self.contains(p) {
            let mut d = f64::INFINITY;
            for a in 0..3 {
                d = d.min(p[a] - self.min[a]).min(self.max[a] - p[a]);
            }
            d
        } else {
            let mut s = 0.0;
            for a in 0..3 {
                let e = (self.min[a] - p[a]).max(0.0).max(p[a] - self.max[a]);
                s += e * e;
            }
            s.sqrt()
        }
    }
}

/// Straight segment `r(mu) = p0 + mu (p1 - p0)`, `0 <= mu <= 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment {
    pub p0: Vec3,
    pub p1: Vec3,
}

impl Segment {
    pub fn new(p0: Vec3, p1: Vec3) -> Self {
        debug_assert!((p1 - p0).norm() > 0.0, "zero-length segment");
        Self { p0, p1 }
    }

    pub fn direction(&self) -> Vec3 {
        self.p1 - self.p0
    }

    pub fn length(&self) -> f64 {
        self.direction().norm()
    }

    pub fn point_at(&self, mu: f64) -> Vec3 {
        self.p0 + self.direction() * mu
    }

    /// Bounding box of the two endpoints.
    pub fn bounds(&self) -> Aabb {
        Aabb {
            min: self.p0.inf(&self.p1),
            max: self.p0.sup(&self.p1),
        }
    }
}

/// Orthonormal frame of a wall-mounted panel. `u` runs horizontally along
/// the wall, `v` vertically, and `normal = u x v` points into the room.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Frame {
    pub center: Vec3,
    pub u: Vec3,
    pub v: Vec3,
    pub normal: Vec3,
}

impl Frame {
    /// Frame for a panel on a vertical wall, facing `normal` (horizontal).
    pub fn on_wall(center: Vec3, normal: Vec3) -> Self {
        let normal = normal.normalize();
        let v = Vec3::z();
        let u = v.cross(&normal);
        Self { center, u, v, normal }
    }

    /// Local coordinates `(u, v, normal)` of a world point.
    pub fn to_local(&self, p: &Vec3) -> Vec3 {
        let d = p - self.center;
        Vec3::new(d.dot(&self.u), d.dot(&self.v), d.dot(&self.normal))
    }

    /// World point from local coordinates.
    pub fn to_world(&self, l: &Vec3) -> Vec3 {
        self.center + self.u * l.x + self.v * l.y + self.normal * l.z
    }

    /// World direction for sweep angles: azimuth about the vertical, measured
    /// from the normal toward `u`; elevation above the horizontal.
    pub fn sweep_direction(&self, azimuth: f64, elevation: f64) -> Vec3 {
        let (se, ce) = elevation.sin_cos();
        let (sa, ca) = azimuth.sin_cos();
        self.normal * (ce * ca) + self.u * (ce * sa) + self.v * se
    }

    /// Inverse of [`Frame::sweep_direction`] for a world direction.
    pub fn sweep_angles(&self, dir: &Vec3) -> (f64, f64) {
        let d = dir.normalize();
        let az = d.dot(&self.u).atan2(d.dot(&self.normal));
        let el = d.dot(&self.v).clamp(-1.0, 1.0).asin();
        (az, el)
    }
}

/// Polar angle from local +z and azimuth in `[0, 2 pi)` of a local vector.
pub fn polar_angles(local: &Vec3) -> (f64, f64) {
    let r = local.norm();
    let theta = (local.z / r).clamp(-1.0, 1.0).acos();
    let mut phi = local.y.atan2(local.x);
    if phi < 0.0 {
        phi += 2.0 * core::f64::consts::PI;
    }
    if phi >= 2.0 * core::f64::consts::PI {
        phi = 0.0;
    }
    (theta, phi)
}

/// Parametric overlap `[t_enter, t_exit]` of the line `origin + t dir` with
/// the box, or `None` if the line misses it. A line running exactly along a
/// face is treated as missing.
fn slab_interval(origin: &Vec3, dir: &Vec3, b: &Aabb) -> Option<(f64, f64)> {
    let mut t0 = f64::NEG_INFINITY;
    let mut t1 = f64::INFINITY;
    for a in 0..3 {
        let o = origin[a];
        let d = dir[a];
        if d == 0.0 {
            if o <= b.min[a] || o >= b.max[a] {
                return None;
            }
            continue;
        }
        let inv = 1.0 / d;
        let mut ta = (b.min[a] - o) * inv;
        let mut tb = (b.max[a] - o) * inv;
        if ta > tb {
            core::mem::swap(&mut ta, &mut tb);
        }
        t0 = t0.max(ta);
        t1 = t1.min(tb);
        if t0 > t1 {
            return None;
        }
    }
    Some((t0, t1))
}

/// Smallest `t >= 0` with `origin + t dir` on the box boundary.
///
/// From inside the box this is the exit distance, which is how wall hits
/// are found when casting from a panel inside the room.
pub fn ray_aabb_intersect(origin: &Vec3, dir: &Vec3, b: &Aabb) -> Option<f64> {
    debug_assert!((dir.norm() - 1.0).abs() < 1e-9, "ray direction must be unit-norm");
    let (t0, t1) = slab_interval(origin, dir, b)?;
    if t0 >= 0.0 {
        Some(t0)
    } else if t1 >= 0.0 {
        Some(t1)
    } else {
        None
    }
}

/// Far end of the ray's overlap with the box: the wall-hit distance for a
/// ray cast from a point inside or on the surface of a room.
pub fn ray_exit_distance(origin: &Vec3, dir: &Vec3, b: &Aabb) -> Option<f64> {
    let (_, t1) = slab_interval(origin, dir, b)?;
    (t1 >= 0.0).then_some(t1)
}

/// True when some box meets the open segment `0 < mu < 1` in more than a
/// grazing touch. Contact exactly at an endpoint is not blockage.
pub fn los_blocked(p0: &Vec3, p1: &Vec3, obstacles: &[Aabb]) -> bool {
    let d = p1 - p0;
    debug_assert!(d.norm() > 0.0);
    obstacles.iter().any(|b| match slab_interval(p0, &d, b) {
        Some((t0, t1)) => t0.max(0.0) < t1.min(1.0),
        None => false,
    })
}

/// `n . (point - plane_point)`; positive on the side the normal points to.
pub fn signed_plane_distance(point: &Vec3, plane_point: &Vec3, plane_normal: &Vec3) -> f64 {
    debug_assert!((plane_normal.norm() - 1.0).abs() < 1e-9);
    plane_normal.dot(&(point - plane_point))
}

/// Sine of the angle between two unit vectors, computed from the cross
/// product so that small angles keep full relative precision.
pub(crate) fn angle_between(a: &Vec3, b: &Vec3) -> f64 {
    let s = a.cross(b).norm();
    let c = a.dot(b);
    s.atan2(c)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ray_hits_slab_front_face() {
        let b = Aabb::new(Vec3::new(2.0, -1.0, -1.0), Vec3::new(3.0, 1.0, 1.0));
        let t = ray_aabb_intersect(&Vec3::zeros(), &Vec3::x(), &b).unwrap();
        assert_eq!(t, 2.0);
    }

    #[test]
    fn ray_misses_box() {
        let b = Aabb::new(Vec3::new(2.0, 2.0, 2.0), Vec3::new(3.0, 3.0, 3.0));
        assert!(ray_aabb_intersect(&Vec3::zeros(), &Vec3::z(), &b).is_none());
    }

    #[test]
    fn ray_from_inside_returns_exit() {
        let room = Aabb::new(Vec3::zeros(), Vec3::new(10.0, 10.0, 3.0));
        let t = ray_aabb_intersect(&Vec3::new(0.5, 5.0, 1.5), &Vec3::x(), &room).unwrap();
        assert_eq!(t, 9.5);
        // an origin on a face is itself a boundary point
        let t = ray_aabb_intersect(&Vec3::new(0.0, 5.0, 1.5), &Vec3::x(), &room).unwrap();
        assert_eq!(t, 0.0);
        assert_eq!(ray_exit_distance(&Vec3::new(0.0, 5.0, 1.5), &Vec3::x(), &room), Some(10.0));
    }

    #[test]
    fn los_box_at_midpoint() {
        let p0 = Vec3::new(0.0, 5.0, 1.5);
        let p1 = Vec3::new(10.0, 5.0, 1.5);
        let b = Aabb::new(Vec3::new(4.5, 4.5, 0.0), Vec3::new(5.5, 5.5, 1.6));
        assert!(los_blocked(&p0, &p1, &[b]));
        assert!(!los_blocked(&p0, &p1, &[]));
    }

    #[test]
    fn endpoint_contact_is_not_blockage() {
        let b = Aabb::new(Vec3::new(1.0, -1.0, -1.0), Vec3::new(2.0, 1.0, 1.0));
        // ends exactly on the near face
        assert!(!los_blocked(&Vec3::zeros(), &Vec3::new(1.0, 0.0, 0.0), &[b]));
        // starts on the far face and leaves
        assert!(!los_blocked(&Vec3::new(2.0, 0.0, 0.0), &Vec3::new(3.0, 0.0, 0.0), &[b]));
        // passes through
        assert!(los_blocked(&Vec3::zeros(), &Vec3::new(3.0, 0.0, 0.0), &[b]));
    }

    #[test]
    fn plane_distance_examples() {
        let q = Vec3::new(1.0, 2.0, 3.0);
        let n = Vec3::new(0.0, 0.6, 0.8);
        let on_plane = q + Vec3::new(1.0, 0.8, -0.6);
        assert!(signed_plane_distance(&on_plane, &q, &n).abs() < 1e-15);
        assert!((signed_plane_distance(&(q + n), &q, &n) - 1.0).abs() < 1e-15);
        assert!((signed_plane_distance(&(q - 2.0 * n), &q, &n) + 2.0).abs() < 1e-15);
    }

    #[test]
    fn wall_frame_is_right_handed() {
        let f = Frame::on_wall(Vec3::new(0.0, 5.0, 1.5), Vec3::x());
        assert!((f.u - Vec3::y()).norm() < 1e-15);
        assert!((f.u.cross(&f.v) - f.normal).norm() < 1e-15);
        let p = Vec3::new(2.0, 6.0, 1.0);
        assert!((f.to_world(&f.to_local(&p)) - p).norm() < 1e-14);
        let d = f.sweep_direction(0.3, -0.2);
        let (a, e) = f.sweep_angles(&d);
        assert!((a - 0.3).abs() < 1e-14 && (e + 0.2).abs() < 1e-14);
        // panel facing +x: the sweep direction is [cos e cos a, cos e sin a, sin e]
        let expect = Vec3::new((-0.2f64).cos() * 0.3f64.cos(), (-0.2f64).cos() * 0.3f64.sin(), (-0.2f64).sin());
        assert!((d - expect).norm() < 1e-15);
    }

    #[test]
    fn surface_distance_on_face_is_zero() {
        let b = Aabb::new(Vec3::zeros(), Vec3::new(1.0, 1.0, 1.0));
        assert_eq!(b.surface_distance(&Vec3::new(0.5, 0.5, 1.0)), 0.0);
        assert_eq!(b.surface_distance(&Vec3::new(0.5, 0.5, 2.0)), 1.0);
        assert!((b.surface_distance(&Vec3::new(0.5, 0.5, 0.75)) - 0.25).abs() < 1e-15);
    }
}
