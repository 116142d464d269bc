//! Panel array pattern, steering phases, directional gain and the cascaded
//! link budget.
//!
//! Pattern quantities live in a panel's local frame: `x` along the wall,
//! `y` vertical, `z` the panel normal, origin at the panel centre. Angles
//! are polar from the normal and azimuth from local `x`.

use alloc::vec::Vec;
use core::f64::consts::PI;
use num_complex::Complex64;
use num_traits::Float;

use crate::geometry::{polar_angles, Frame, Vec3};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MmwaveError {
    QuadratureUnderflow,
}

impl MmwaveError {
    pub fn code(&self) -> &'static str {
        match self {
            MmwaveError::QuadratureUnderflow => "mmwave.quadrature_underflow",
        }
    }
}

impl core::fmt::Display for MmwaveError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str("pattern normalisation integral underflowed")
    }
}

/// Element path-delay model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OmegaModel {
    /// Offsets along local `x` and `z`, indexed by `m` only.
    #[default]
    Literal,
    /// Offsets along `x` by `m` and along `y` by `n`.
    Symmetric,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PanelArray {
    pub frame: Frame,
    pub m: usize,
    pub n: usize,
    /// Element side `D` in metres.
    pub element_side: f64,
    pub efficiency: f64,
    pub omega: OmegaModel,
}

impl PanelArray {
    pub fn new(frame: Frame, m: usize, n: usize, element_side: f64, efficiency: f64) -> Self {
        Self { frame, m, n, element_side, efficiency, omega: OmegaModel::Literal }
    }

    /// Local polar angles of a world point.
    pub fn angles_to(&self, p: &Vec3) -> (f64, f64) {
        polar_angles(&self.frame.to_local(p))
    }
}

/// Steered direction plus the source and receiver reference points, all in
/// the panel's local frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SteeringTarget {
    pub azimuth: f64,
    pub elevation: f64,
    pub source: Vec3,
    pub receiver: Vec3,
}

impl SteeringTarget {
    /// Steer `panel` from the world point `source` toward the world point
    /// `aim`, with the panel centre as receiver reference.
    pub fn toward(panel: &PanelArray, source: &Vec3, aim: &Vec3) -> Self {
        let (elevation, azimuth) = panel.angles_to(aim);
        Self { azimuth, elevation, source: panel.frame.to_local(source), receiver: Vec3::zeros() }
    }
}

/// `D sin t [(m - 1/2) cos p + (n - 1/2) sin p] + (T - R) . u(t, p)`.
/// Indices are 1-based.
pub fn zeta(m: usize, n: usize, theta: f64, phi: f64, target: &SteeringTarget, d: f64) -> f64 {
    let (st, ct) = theta.sin_cos();
    let (sp, cp) = phi.sin_cos();
    let dt = target.source - target.receiver;
    d * st * ((m as f64 - 0.5) * cp + (n as f64 - 0.5) * sp) + dt.x * st * cp + dt.y * st * sp + dt.z * ct
}

/// Path-delay phase to element row `m` as in the literal model.
pub fn omega(m: usize, theta: f64, phi: f64, target: &SteeringTarget, d: f64, k0: f64) -> f64 {
    let st = theta.sin();
    let (sp, cp) = phi.sin_cos();
    let q = d * (m as f64 - 0.5);
    let (t, r) = (&target.source, &target.receiver);
    let dx = t.x - q * st * cp - r.x;
    let dy = t.y - r.y;
    let dz = t.z - q * st * sp - r.z;
    k0 * (dx * dx + dy * dy + dz * dz).sqrt()
}

/// Same as [`omega`] but offset in the panel plane by `(m, n)`.
pub fn omega_symmetric(m: usize, n: usize, theta: f64, phi: f64, target: &SteeringTarget, d: f64, k0: f64) -> f64 {
    let st = theta.sin();
    let (sp, cp) = phi.sin_cos();
    let qm = d * (m as f64 - 0.5);
    let qn = d * (n as f64 - 0.5);
    let (t, r) = (&target.source, &target.receiver);
    let dx = t.x - qm * st * cp - r.x;
    let dy = t.y - qn * st * sp - r.y;
    let dz = t.z - r.z;
    k0 * (dx * dx + dy * dy + dz * dz).sqrt()
}

fn element_omega(
    model: OmegaModel,
    m: usize,
    n: usize,
    theta: f64,
    phi: f64,
    target: &SteeringTarget,
    d: f64,
    k0: f64,
) -> f64 {
    match model {
        OmegaModel::Literal => omega(m, theta, phi, target, d, k0),
        OmegaModel::Symmetric => omega_symmetric(m, n, theta, phi, target, d, k0),
    }
}

/// Per-element phases, `M x N`, addressed with 1-based indices.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseMatrix {
    pub rows: usize,
    pub cols: usize,
    values: Vec<f64>,
}

impl PhaseMatrix {
    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut values = Vec::with_capacity(rows * cols);
        for m in 1..=rows {
            for n in 1..=cols {
                values.push(f(m, n));
            }
        }
        Self { rows, cols, values }
    }

    pub fn get(&self, m: usize, n: usize) -> f64 {
        self.values[(m - 1) * self.cols + (n - 1)]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Split `Phi_mn = a_m + b_n` when the matrix has that form.
    fn separate(&self) -> Option<(Vec<f64>, Vec<f64>)> {
        let a: Vec<f64> = (1..=self.rows).map(|m| self.get(m, 1)).collect();
        let b: Vec<f64> = (1..=self.cols).map(|n| self.get(1, n) - self.get(1, 1)).collect();
        for m in 1..=self.rows {
            for n in 1..=self.cols {
                let v = self.get(m, n);
                if (v - a[m - 1] - b[n - 1]).abs() > 1e-9 * (1.0 + v.abs()) {
                    return None;
                }
            }
        }
        Some((a, b))
    }
}

pub fn steering_phases(panel: &PanelArray, target: &SteeringTarget, k0: f64) -> PhaseMatrix {
    let (th, ph) = (target.elevation, target.azimuth);
    let st = th.sin();
    let (sp, cp) = ph.sin_cos();
    let d = panel.element_side;
    PhaseMatrix::from_fn(panel.m, panel.n, |m, n| {
        -k0 * d * (m as f64 * cp * st + n as f64 * sp * st) - element_omega(panel.omega, m, n, th, ph, target, d, k0)
    })
}

/// Reference double sum `sum_mn exp(j(k0 zeta + omega + Phi))`.
pub fn array_factor(
    panel: &PanelArray,
    phases: &PhaseMatrix,
    theta: f64,
    phi: f64,
    target: &SteeringTarget,
    k0: f64,
) -> Complex64 {
    let d = panel.element_side;
    let mut acc = Complex64::new(0.0, 0.0);
    for m in 1..=panel.m {
        for n in 1..=panel.n {
            let arg = k0 * zeta(m, n, theta, phi, target, d)
                + element_omega(panel.omega, m, n, theta, phi, target, d, k0)
                + phases.get(m, n);
            acc += Complex64::from_polar(1.0, arg);
        }
    }
    acc
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureGrid {
    /// Samples on `[0, theta_max]`, both ends included.
    pub theta_samples: usize,
    /// Samples on the periodic `[0, 2 pi)`.
    pub phi_samples: usize,
    pub theta_max: f64,
}

impl QuadratureGrid {
    pub const HEMISPHERE: f64 = PI / 2.0;
    pub const SPHERE: f64 = PI;

    pub fn new(theta_samples: usize, phi_samples: usize, theta_max: f64) -> Self {
        Self { theta_samples, phi_samples, theta_max }
    }

    /// Grid sized for the panel. The full sphere doubles the polar samples so
    /// the spacing matches the hemisphere grid.
    pub fn default_for(m: usize, n: usize, theta_max: f64) -> Self {
        let (t, p) = if m <= 16 && n <= 16 { (121, 240) } else { (181, 360) };
        let t = if theta_max > Self::HEMISPHERE + 1e-12 { 2 * t - 1 } else { t };
        Self::new(t, p, theta_max)
    }

    /// Same spacing halved in both directions.
    pub fn refined(&self) -> Self {
        Self::new(2 * self.theta_samples - 1, 2 * self.phi_samples, self.theta_max)
    }

    pub fn is_valid(&self) -> bool {
        self.theta_samples >= 8
            && self.phi_samples >= 8
            && ((self.theta_max - Self::HEMISPHERE).abs() < 1e-12 || (self.theta_max - Self::SPHERE).abs() < 1e-12)
    }

    /// `sum w_ij f(theta_i, phi_j) sin(theta_i)` for the trapezoid rule.
    pub fn integrate(&self, mut f: impl FnMut(f64, f64) -> f64) -> f64 {
        let dt = self.theta_max / (self.theta_samples - 1) as f64;
        let dp = 2.0 * PI / self.phi_samples as f64;
        let mut total = 0.0;
        for i in 0..self.theta_samples {
            let th = i as f64 * dt;
            let w = if i == 0 || i + 1 == self.theta_samples { 0.5 } else { 1.0 };
            let s = th.sin();
            if s == 0.0 {
                continue;
            }
            let mut row = 0.0;
            for j in 0..self.phi_samples {
                row += f(th, j as f64 * dp);
            }
            total += w * s * row;
        }
        total * dt * dp
    }

    /// The terms of [`QuadratureGrid::integrate`] whose grid cell lies within
    /// `half_width` cells of `(theta, phi)`. Every term is nonnegative for a
    /// nonnegative integrand, so this never exceeds the full sum.
    pub fn integrate_window(
        &self,
        theta: f64,
        phi: f64,
        half_width: usize,
        mut f: impl FnMut(f64, f64) -> f64,
    ) -> f64 {
        let dt = self.theta_max / (self.theta_samples - 1) as f64;
        let dp = 2.0 * PI / self.phi_samples as f64;
        let ci = (theta / dt).round() as isize;
        let cj = (phi / dp).round() as isize;
        let h = half_width as isize;
        let (np, nt) = (self.phi_samples as isize, self.theta_samples as isize);
        let mut total = 0.0;
        for i in (ci - h).max(0)..=(ci + h).min(nt - 1) {
            let th = i as f64 * dt;
            let w = if i == 0 || i + 1 == nt { 0.5 } else { 1.0 };
            let s = th.sin();
            if s == 0.0 {
                continue;
            }
            let mut row = 0.0;
            let span = (2 * h + 1).min(np);
            for off in 0..span {
                let j = (cj - h + off).rem_euclid(np);
                row += f(th, j as f64 * dp);
            }
            total += w * s * row;
        }
        total * dt * dp
    }
}

/// Pattern power evaluator that exploits `Phi_mn = a_m + b_n` with the
/// literal delay model; falls back to the double sum otherwise.
struct PatternPower<'a> {
    panel: &'a PanelArray,
    phases: &'a PhaseMatrix,
    target: &'a SteeringTarget,
    k0: f64,
    split: Option<(Vec<f64>, Vec<f64>, Option<f64>)>,
}

impl<'a> PatternPower<'a> {
    fn new(panel: &'a PanelArray, phases: &'a PhaseMatrix, target: &'a SteeringTarget, k0: f64) -> Self {
        let split = match panel.omega {
            OmegaModel::Literal => phases.separate().map(|(a, b)| {
                let slope = if b.len() > 1 { b[1] - b[0] } else { 0.0 };
                let linear = b
                    .iter()
                    .enumerate()
                    .all(|(i, &v)| (v - slope * i as f64).abs() <= 1e-9 * (1.0 + v.abs()));
                (a, b, linear.then_some(slope))
            }),
            OmegaModel::Symmetric => None,
        };
        Self { panel, phases, target, k0, split }
    }

    fn eval(&self, theta: f64, phi: f64) -> f64 {
        let Some((a, b, slope)) = &self.split else {
            return array_factor(self.panel, self.phases, theta, phi, self.target, self.k0).norm_sqr();
        };
        let d = self.panel.element_side;
        let k0 = self.k0;
        let st = theta.sin();
        let (sp, cp) = phi.sin_cos();
        let kds = k0 * d * st;
        // rows: exp(j(k0 D s (m - 1/2) cos p + omega_m + a_m))
        let t = self.target.source - self.target.receiver;
        let r2 = t.norm_squared();
        let g = t.x * cp + t.z * sp;
        let mut rows = Complex64::new(0.0, 0.0);
        for (i, am) in a.iter().enumerate() {
            let q = d * (i as f64 + 0.5);
            let w = k0 * (r2 - 2.0 * q * st * g + q * q * st * st).max(0.0).sqrt();
            rows += Complex64::from_polar(1.0, kds * (i as f64 + 0.5) * cp + w + am);
        }
        let cols = match slope {
            Some(s) => {
                let psi = kds * sp + s;
                let half = 0.5 * psi;
                let den = half.sin();
                let nn = self.panel.n as f64;
                if den.abs() < 1e-12 {
                    nn * nn
                } else {
                    let v = (nn * half).sin() / den;
                    v * v
                }
            }
            None => {
                let mut acc = Complex64::new(0.0, 0.0);
                for (j, bn) in b.iter().enumerate() {
                    acc += Complex64::from_polar(1.0, kds * (j as f64 + 0.5) * sp + bn);
                }
                acc.norm_sqr()
            }
        };
        rows.norm_sqr() * cols
    }
}

/// `int |F|^2 sin t dt dp` over the grid's polar range.
pub fn pattern_integral(
    panel: &PanelArray,
    phases: &PhaseMatrix,
    target: &SteeringTarget,
    k0: f64,
    grid: &QuadratureGrid,
) -> f64 {
    let pp = PatternPower::new(panel, phases, target, k0);
    grid.integrate(|t, p| pp.eval(t, p))
}

/// `|F|^2` through the same evaluator the quadrature uses.
pub fn pattern_power(
    panel: &PanelArray,
    phases: &PhaseMatrix,
    theta: f64,
    phi: f64,
    target: &SteeringTarget,
    k0: f64,
) -> f64 {
    PatternPower::new(panel, phases, target, k0).eval(theta, phi)
}

/// `eta 4 pi |F(t, p)|^2` over a precomputed normalisation integral.
pub fn gain_from_integral(panel: &PanelArray, power: f64, integral: f64) -> Result<f64, MmwaveError> {
    if !(integral >= 1e-300) {
        return Err(MmwaveError::QuadratureUnderflow);
    }
    Ok(panel.efficiency * 4.0 * PI * power / integral)
}

pub fn directional_gain(
    panel: &PanelArray,
    phases: &PhaseMatrix,
    theta: f64,
    phi: f64,
    target: &SteeringTarget,
    k0: f64,
    grid: &QuadratureGrid,
) -> Result<f64, MmwaveError> {
    let pp = PatternPower::new(panel, phases, target, k0);
    let integral = grid.integrate(|t, p| pp.eval(t, p));
    gain_from_integral(panel, pp.eval(theta, phi), integral)
}

/// Upper bound on [`directional_gain`] from a partial normalisation sum
/// around the steered direction; cheap next to the full quadrature.
pub fn directional_gain_bound(
    panel: &PanelArray,
    phases: &PhaseMatrix,
    theta: f64,
    phi: f64,
    target: &SteeringTarget,
    k0: f64,
    grid: &QuadratureGrid,
    half_width: usize,
) -> f64 {
    let pp = PatternPower::new(panel, phases, target, k0);
    let part = grid.integrate_window(target.elevation, target.azimuth, half_width, |t, p| pp.eval(t, p));
    if !(part > 0.0) {
        return f64::INFINITY;
    }
    // margin for the different summation order
    panel.efficiency * 4.0 * PI * pp.eval(theta, phi) / part * (1.0 + 1e-9)
}

pub fn max_gain(efficiency: f64, m: usize, n: usize) -> f64 {
    efficiency * (m * n) as f64
}

pub fn effective_aperture(m: usize, n: usize, wavelength: f64) -> f64 {
    (m * n) as f64 * wavelength * wavelength / (4.0 * PI)
}

/// Gain along a route: perfect steering on every hop but the last, whose
/// pattern gain is `last_hop_gain`.
pub fn cascaded_gain(route: &[&PanelArray], last_hop_gain: f64, wavelength: f64) -> f64 {
    assert!(!route.is_empty(), "route needs at least one panel");
    let (last, rest) = route.split_last().unwrap();
    let mut g = 1.0;
    for p in rest {
        g *= effective_aperture(p.m, p.n, wavelength) * max_gain(p.efficiency, p.m, p.n);
    }
    g * effective_aperture(last.m, last.n, wavelength) * last_hop_gain
}

/// `prod C0 (d_i / d0)^(-n_i)` with `C0 = lambda^2 / (4 pi d0)^2`.
pub fn path_loss(lengths: &[f64], exponents: &[f64], wavelength: f64, d0: f64) -> f64 {
    assert_eq!(lengths.len(), exponents.len());
    let c0 = (wavelength / (4.0 * PI * d0)).powi(2);
    lengths
        .iter()
        .zip(exponents)
        .map(|(&d, &n)| c0 * (d / d0).powf(-n))
        .product()
}

/// `log2(1 + l_p G_t G_r gamma G_route)`.
pub fn spectral_efficiency(path_loss: f64, g_t: f64, g_r: f64, gamma: f64, g_route: f64) -> f64 {
    (path_loss * g_t * g_r * gamma * g_route).ln_1p() / core::f64::consts::LN_2
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn panel(m: usize, n: usize) -> PanelArray {
        PanelArray::new(Frame::on_wall(Vec3::new(0.0, 5.0, 1.5), Vec3::x()), m, n, 5e-3, 1.0)
    }

    fn target(th: f64, ph: f64) -> SteeringTarget {
        SteeringTarget { azimuth: ph, elevation: th, source: Vec3::new(0.4, -0.3, 2.0), receiver: Vec3::zeros() }
    }

    const K0: f64 = 2.0 * PI / 1e-2;

    #[test]
    fn zeta_at_broadside() {
        let t = target(0.3, 1.0);
        assert!((zeta(3, 5, 0.0, 0.7, &t, 5e-3) - 2.0).abs() < 1e-15);
    }

    #[test]
    fn omega_vanishes_when_coincident() {
        let t = SteeringTarget { azimuth: 0.0, elevation: 0.0, source: Vec3::zeros(), receiver: Vec3::zeros() };
        assert_eq!(omega(1, 0.0, 0.0, &t, 5e-3, K0), 0.0);
        let t = target(0.2, 0.1);
        let a = omega(2, 0.4, 0.9, &t, 5e-3, K0);
        let b = omega(2, 0.4, 0.9, &t, 5e-3, 2.0 * K0);
        assert!((b - 2.0 * a).abs() < 1e-12 * b);
    }

    #[test]
    fn broadside_phases_are_minus_omega() {
        let p = panel(4, 3);
        let t = target(0.0, 0.0);
        let ph = steering_phases(&p, &t, K0);
        for m in 1..=4 {
            for n in 1..=3 {
                assert_eq!(ph.get(m, n), -omega(m, 0.0, 0.0, &t, 5e-3, K0));
            }
        }
    }

    #[test]
    fn single_element_unit_pattern() {
        let p = panel(1, 1);
        let t = target(0.4, 1.2);
        let ph = PhaseMatrix::from_fn(1, 1, |m, n| -K0 * zeta(m, n, 0.4, 1.2, &t, 5e-3) - omega(m, 0.4, 1.2, &t, 5e-3, K0));
        assert!((array_factor(&p, &ph, 0.4, 1.2, &t, K0).norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn fast_path_matches_double_sum() {
        let p = panel(6, 5);
        let t = target(0.5, 2.0);
        let ph = steering_phases(&p, &t, K0);
        for &(th, phi) in &[(0.1, 0.2), (0.5, 2.0), (1.2, 4.0), (1.5, 5.9)] {
            let slow = array_factor(&p, &ph, th, phi, &t, K0).norm_sqr();
            let fast = pattern_power(&p, &ph, th, phi, &t, K0);
            assert!((slow - fast).abs() < 1e-9 * slow.max(1.0), "{slow} {fast}");
        }
        // a non-separable matrix takes the reference route
        let mut i = 0.0;
        let odd = PhaseMatrix::from_fn(6, 5, |_, _| {
            i += 0.37;
            i * i
        });
        let slow = array_factor(&p, &odd, 0.7, 1.0, &t, K0).norm_sqr();
        assert_eq!(slow, pattern_power(&p, &odd, 0.7, 1.0, &t, K0));
    }

    #[test]
    fn isotropic_hemisphere_gain() {
        let grid = QuadratureGrid::new(121, 240, QuadratureGrid::HEMISPHERE);
        let i = grid.integrate(|_, _| 1.0);
        let mut p = panel(1, 1);
        p.efficiency = 0.7;
        let g = gain_from_integral(&p, 1.0, i).unwrap();
        assert!((g - 1.4).abs() < 1e-3, "{g}");
    }

    #[test]
    fn window_bound_dominates() {
        let p = panel(8, 8);
        let t = target(0.6, 2.5);
        let ph = steering_phases(&p, &t, K0);
        let grid = QuadratureGrid::new(61, 120, QuadratureGrid::HEMISPHERE);
        let g = directional_gain(&p, &ph, 0.62, 2.49, &t, K0, &grid).unwrap();
        for w in [0, 2, 5, 200] {
            let b = directional_gain_bound(&p, &ph, 0.62, 2.49, &t, K0, &grid, w);
            assert!(b >= g, "{w}: {b} < {g}");
        }
        let b = directional_gain_bound(&p, &ph, 0.62, 2.49, &t, K0, &grid, 200);
        assert!((b / g - 1.0).abs() < 1e-8);
    }

    #[test]
    fn link_budget_pieces() {
        assert_eq!(max_gain(1.0, 50, 50), 2500.0);
        assert_eq!(max_gain(0.5, 50, 50), 1250.0);
        assert!((effective_aperture(50, 50, 1e-2) - 1.989e-2).abs() < 1e-5);
        assert!((path_loss(&[1.0], &[2.0], 1e-2, 1.0) - 6.333e-7).abs() < 1e-10);
        assert_eq!(spectral_efficiency(1.0, 1.0, 1.0, 1.0, 1.0), 1.0);
        assert_eq!(spectral_efficiency(1.0, 1.0, 1.0, 1.0, 0.0), 0.0);
        assert!(matches!(gain_from_integral(&panel(1, 1), 1.0, 0.0), Err(MmwaveError::QuadratureUnderflow)));
    }
}
