//! Gaussian-beam emission, received LoS power and photodetector noise.

use core::f64::consts::PI;

use alloc::vec::Vec;
use num_traits::Float;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::geometry::{angle_between, Vec3};

/// Elementary charge, C.
pub const ELEMENTARY_CHARGE: f64 = 1.602176634e-19;
/// Boltzmann constant, J/K.
pub const BOLTZMANN: f64 = 1.380649e-23;

/// One transverse lasing mode of a VCSEL.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BeamMode {
    /// Emitted optical power, W.
    pub transmit_power: f64,
    /// Beam waist radius at the aperture, m.
    pub waist: f64,
    /// Optical wavelength, m.
    pub wavelength: f64,
}

impl BeamMode {
    pub fn new(transmit_power: f64, waist: f64, wavelength: f64) -> Self {
        debug_assert!(transmit_power > 0.0 && waist > 0.0 && wavelength > 0.0);
        Self { transmit_power, waist, wavelength }
    }

    pub fn rayleigh_range(&self) -> f64 {
        PI * self.waist * self.waist / self.wavelength
    }

    pub fn divergence(&self) -> f64 {
        self.wavelength / (PI * self.waist)
    }

    /// `2 P_t A / (pi w0^2)`, the d = 0 value of the received-power scale.
    pub fn peak_scale(&self, pd_area: f64) -> f64 {
        2.0 * self.transmit_power * pd_area / (PI * self.waist * self.waist)
    }
}

/// An optical source on a panel.
#[derive(Debug, Clone, PartialEq)]
pub struct VcselAnchor {
    pub position: Vec3,
    /// Unit beam axis.
    pub boresight: Vec3,
    /// Mode 0 is the primary mode; mode 1 (if present) the second one used
    /// for dual-mode ranging.
    pub modes: Vec<BeamMode>,
    pub tone_id: u32,
}

impl VcselAnchor {
    /// Copy of the anchor with its beam pointed at `target`.
    pub fn aimed_at(&self, target: &Vec3) -> Self {
        let mut a = self.clone();
        a.boresight = (target - self.position).normalize();
        a
    }
}

/// Receiver photodiode and front-end parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhotoDetector {
    /// Active area, m^2.
    pub area: f64,
    /// Unit normal of the detector surface.
    pub normal: Vec3,
    /// Half-angle field of view, rad, in (0, pi/2].
    pub fov_half_angle: f64,
    /// A/W.
    pub responsivity: f64,
    /// Ohm.
    pub load_resistance: f64,
    /// K.
    pub temperature: f64,
    /// Linear noise figure.
    pub noise_figure: f64,
    /// Relative intensity noise, linear 1/Hz.
    pub rin: f64,
    /// Hz.
    pub optical_bandwidth: f64,
    /// When set, replaces `B_o S(P)` with this constant noise power.
    pub noise_power_override: Option<f64>,
}

impl PhotoDetector {
    /// Detector from the reference indoor parameter set (1 cm^2, 90 deg FoV,
    /// 0.7 A/W, 50 Ohm, 300 K, 5 dB noise figure, -155 dB/Hz RIN, 1 GHz).
    pub fn reference(normal: Vec3) -> Self {
        Self {
            area: 1e-4,
            normal,
            fov_half_angle: PI / 2.0,
            responsivity: 0.7,
            load_resistance: 50.0,
            temperature: 300.0,
            noise_figure: 10f64.powf(0.5),
            rin: 10f64.powf(-15.5),
            optical_bandwidth: 1e9,
            noise_power_override: None,
        }
    }

    /// Thermal term `4 k_B T F_n / R_L`.
    pub fn thermal_psd(&self) -> f64 {
        4.0 * BOLTZMANN * self.temperature * self.noise_figure / self.load_resistance
    }
}

/// One RSS reading.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RssSample {
    pub tone_id: u32,
    pub mode: usize,
    pub power: f64,
    pub los_component: f64,
    pub noise_power: f64,
}

/// How the additive receiver noise is produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NoiseMode {
    /// Add the noise power itself, `B_o S`.
    Deterministic,
    /// Add a zero-mean Gaussian draw with standard deviation `B_o S`; the
    /// draw is a pure function of the seed.
    Sampled { seed: u64 },
}

/// Spot radius `w(d) = w0 sqrt(1 + (d/z_R)^2)`.
pub fn beam_radius(mode: &BeamMode, d: f64) -> f64 {
    debug_assert!(d >= 0.0);
    let x = d / mode.rayleigh_range();
    mode.waist * (1.0 + x * x).sqrt()
}

/// Irradiance at range `d` and angle `phi` off the beam axis, W/m^2.
pub fn angular_intensity(mode: &BeamMode, d: f64, phi: f64) -> f64 {
    debug_assert!(d > 0.0 && phi.abs() < PI / 2.0);
    let (s, c) = phi.sin_cos();
    let w = beam_radius(mode, d * c);
    let w2 = w * w;
    2.0 * mode.transmit_power / (PI * w2) * (-2.0 * d * d * s * s / w2).exp()
}

/// Incidence angle at the detector and irradiance angle at the emitter.
fn link_angles(anchor: &VcselAnchor, pd_position: &Vec3, pd: &PhotoDetector) -> (f64, f64, f64) {
    let v = pd_position - anchor.position;
    let d = v.norm();
    let u = v / d;
    let phi = angle_between(&anchor.boresight, &u);
    let cos_psi = pd.normal.dot(&(-u));
    (d, phi, cos_psi)
}

/// LoS power collected by the detector, W. Zero outside the field of view.
pub fn received_los_power(
    anchor: &VcselAnchor,
    mode_index: usize,
    pd_position: &Vec3,
    pd: &PhotoDetector,
) -> f64 {
    let (d, phi, cos_psi) = link_angles(anchor, pd_position, pd);
    debug_assert!(d > 0.0, "detector coincides with the anchor");
    if cos_psi < 0.0 || phi >= PI / 2.0 {
        return 0.0;
    }
    // rect(psi / Psi) is one up to and including the FoV edge
    if cos_psi.min(1.0).acos() > pd.fov_half_angle {
        return 0.0;
    }
    let mode = &anchor.modes[mode_index];
    angular_intensity(mode, d, phi) * pd.area * cos_psi
}

/// Single-sided noise PSD `A_K + R P (2q + RIN R P)`.
pub fn noise_psd(p_los: f64, pd: &PhotoDetector) -> f64 {
    debug_assert!(p_los >= 0.0);
    let rp = pd.responsivity * p_los;
    pd.thermal_psd() + rp * (2.0 * ELEMENTARY_CHARGE + pd.rin * rp)
}

/// Additive noise power `B_o S(P)`, or the configured override.
pub fn noise_power(p_los: f64, pd: &PhotoDetector) -> f64 {
    match pd.noise_power_override {
        Some(p) => p,
        None => pd.optical_bandwidth * noise_psd(p_los, pd),
    }
}

/// Total measured power for one anchor/mode.
pub fn received_power(
    anchor: &VcselAnchor,
    mode_index: usize,
    pd_position: &Vec3,
    pd: &PhotoDetector,
    noise: NoiseMode,
) -> RssSample {
    let los = received_los_power(anchor, mode_index, pd_position, pd);
    let pn = noise_power(los, pd);
    let (power, added) = match noise {
        NoiseMode::Deterministic => (los + pn, pn),
        NoiseMode::Sampled { seed } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let g: f64 = StandardNormal.sample(&mut rng);
            let total = (los + pn * g).max(0.0);
            (total, total - los)
        }
    };
    RssSample {
        tone_id: anchor.tone_id,
        mode: mode_index,
        power,
        los_component: los,
        noise_power: added,
    }
}
