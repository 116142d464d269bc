use std::f64::consts::PI;

use leris_core::optical::*;
use leris_core::Vec3;
use proptest::prelude::*;

fn table_mode() -> BeamMode {
    BeamMode::new(10e-3, 5.6e-6, 950e-9)
}

fn anchor(boresight: Vec3) -> VcselAnchor {
    VcselAnchor { position: Vec3::zeros(), boresight, modes: vec![table_mode()], tone_id: 0 }
}

#[test]
fn reference_beam_numbers() {
    let m = table_mode();
    let z = m.rayleigh_range();
    assert!((z - 1.037e-4).abs() < 1e-7, "{z}");
    assert!((m.divergence() - 950e-9 / (PI * 5.6e-6)).abs() < 1e-15);
    // far field: w ~ w0 d / z_R
    let w = beam_radius(&m, 5.0);
    assert!((w - 5.6e-6 * 5.0 / z).abs() < 1e-9);
    assert!((w - 0.270).abs() < 1e-3, "{w}");
    let i0 = angular_intensity(&m, 5.0, 0.0);
    assert!((i0 - 2.0 * 0.01 / (PI * w * w)).abs() < 1e-15);
    assert!((i0 - 8.7e-2).abs() < 0.2e-2, "{i0}");
}

#[test]
fn boresight_power_and_thermal_floor() {
    let pd = PhotoDetector::reference(-Vec3::x());
    let p = received_los_power(&anchor(Vec3::x()), 0, &Vec3::new(5.0, 0.0, 0.0), &pd);
    assert!((p - angular_intensity(&table_mode(), 5.0, 0.0) * 1e-4).abs() < 1e-18);
    assert!((p - 8.7e-6).abs() < 0.2e-6, "{p}");
    let ak = 4.0 * 1.380649e-23 * 300.0 * 10f64.powf(0.5) / 50.0;
    assert!((noise_psd(0.0, &pd) - ak).abs() < 1e-35);
    assert!((ak - 1.047e-21).abs() < 1e-23, "{ak}");
}

#[test]
fn deterministic_noise_decomposition() {
    let pd = PhotoDetector::reference(-Vec3::x());
    let s = received_power(&anchor(Vec3::x()), 0, &Vec3::new(3.0, 0.2, 0.1), &pd, NoiseMode::Deterministic);
    assert_eq!(s.power, s.los_component + s.noise_power);
    assert!((s.power - s.los_component - s.noise_power).abs() <= f64::EPSILON * s.power);
    assert_eq!(s.noise_power, pd.optical_bandwidth * noise_psd(s.los_component, &pd));
    let away = PhotoDetector::reference(Vec3::x());
    let s = received_power(&anchor(Vec3::x()), 0, &Vec3::new(3.0, 0.0, 0.0), &away, NoiseMode::Deterministic);
    assert_eq!(s.los_component, 0.0);
    assert_eq!(s.power, away.optical_bandwidth * away.thermal_psd());
}

#[test]
fn sampled_noise_is_bit_reproducible() {
    let pd = PhotoDetector::reference(-Vec3::x());
    let at = Vec3::new(4.0, 0.5, 0.0);
    let a = received_power(&anchor(Vec3::x()), 0, &at, &pd, NoiseMode::Sampled { seed: 99 });
    let b = received_power(&anchor(Vec3::x()), 0, &at, &pd, NoiseMode::Sampled { seed: 99 });
    assert_eq!(a.power.to_bits(), b.power.to_bits());
    let c = received_power(&anchor(Vec3::x()), 0, &at, &pd, NoiseMode::Sampled { seed: 100 });
    assert_ne!(a.power, c.power);
    assert!(a.power >= 0.0);
}

#[test]
fn fov_edge_is_inclusive() {
    let mut pd = PhotoDetector::reference(-Vec3::x());
    pd.fov_half_angle = 0.5;
    let a = anchor(Vec3::new(1.0, 0.0, 0.0));
    // detector normal tilted so psi is just inside / just outside the FoV
    let inside = PhotoDetector { normal: Vec3::new(-(0.499f64).cos(), (0.499f64).sin(), 0.0), ..pd };
    let outside = PhotoDetector { normal: Vec3::new(-(0.501f64).cos(), (0.501f64).sin(), 0.0), ..pd };
    let at = Vec3::new(2.0, 0.0, 0.0);
    let pin = received_los_power(&a, 0, &at, &inside);
    assert!(pin > 0.0);
    assert_eq!(received_los_power(&a, 0, &at, &outside), 0.0);
    // continuity approaching the edge from inside
    let edge = PhotoDetector { normal: Vec3::new(-(0.4999999f64).cos(), (0.4999999f64).sin(), 0.0), ..pd };
    let pe = received_los_power(&a, 0, &at, &edge);
    assert!((pe - pin).abs() / pin < 1e-2);
}

proptest! {
    #[test]
    fn radius_identity(d in 0.0f64..100.0, w0 in 1e-6f64..1e-2) {
        let m = BeamMode::new(1e-2, w0, 950e-9);
        let w = beam_radius(&m, d);
        let z = PI * w0 * w0 / 950e-9;
        let rhs = w0 * w0 * (1.0 + (d / z) * (d / z));
        prop_assert!(((w * w - rhs) / rhs).abs() < 1e-12);
        prop_assert!((m.rayleigh_range() - z).abs() <= 1e-12 * z);
    }

    #[test]
    fn intensity_peaks_on_axis(d in 0.1f64..20.0, phi in -1.5f64..1.5) {
        let m = table_mode();
        prop_assert!(angular_intensity(&m, d, phi) <= angular_intensity(&m, d, 0.0));
    }

    #[test]
    fn power_falls_along_boresight(d in 0.2f64..15.0, dd in 0.01f64..5.0) {
        let pd = PhotoDetector::reference(-Vec3::x());
        let a = anchor(Vec3::x());
        let near = received_los_power(&a, 0, &Vec3::new(d, 0.0, 0.0), &pd);
        let far = received_los_power(&a, 0, &Vec3::new(d + dd, 0.0, 0.0), &pd);
        prop_assert!(far < near);
    }

    #[test]
    fn power_is_linear_in_transmit_power(x in 0.5f64..8.0, y in -2.0f64..2.0, scale in 0.1f64..10.0) {
        let pd = PhotoDetector::reference(-Vec3::x());
        let mut a = anchor(Vec3::x());
        let at = Vec3::new(x, y, 0.3);
        let p1 = received_los_power(&a, 0, &at, &pd);
        a.modes[0].transmit_power *= scale;
        let p2 = received_los_power(&a, 0, &at, &pd);
        prop_assert!((p2 - scale * p1).abs() <= 1e-12 * p2.abs().max(1e-300));
    }

    #[test]
    fn noise_psd_increases(p in 0.0f64..1e-2, dp in 1e-9f64..1e-3) {
        let pd = PhotoDetector::reference(Vec3::z());
        prop_assert!(noise_psd(p + dp, &pd) > noise_psd(p, &pd));
    }

    #[test]
    fn deterministic_power_dominates_los(x in 0.5f64..9.0, y in -4.0f64..4.0, z in -1.0f64..1.0, nx in -1.0f64..1.0, ny in -1.0f64..1.0) {
        let n = Vec3::new(nx, ny, 0.3).normalize();
        let pd = PhotoDetector::reference(n);
        let s = received_power(&anchor(Vec3::x()), 0, &Vec3::new(x, y, z), &pd, NoiseMode::Deterministic);
        prop_assert!(s.power >= s.los_component);
    }
}
