use std::f64::consts::PI;

use leris_core::localization::LocalizationError;
use leris_core::scenario::*;
use leris_core::sweep::*;
use leris_core::Vec3;
use proptest::prelude::*;

fn small_link() -> SimConfig {
    let mut cfg = SimConfig::reference();
    cfg.link.m = 8;
    cfg.link.n = 8;
    cfg
}

#[test]
fn scenarios_are_reproducible() {
    let cfg = SimConfig::reference();
    let a = generate_scenario(99, 3, 4, &[0, 1, 2, 3], &cfg).unwrap();
    let b = generate_scenario(99, 3, 4, &[0, 1, 2, 3], &cfg).unwrap();
    assert_eq!(a, b);
    assert_ne!(a.users, generate_scenario(100, 3, 4, &[0, 1, 2, 3], &cfg).unwrap().users);
}

#[test]
fn single_user_without_obstacles() {
    let cfg = SimConfig::reference();
    let s = generate_scenario(5, 1, 0, &[0], &cfg).unwrap();
    assert!(s.obstacles.is_empty());
    assert_eq!(s.users.len(), 1);
    assert_eq!(s.users[0].position.z, 1.5);
    assert_eq!(s.anchors.len(), 4);
    assert!(s.anchors.iter().all(|a| a.len() == 24));
}

#[test]
fn user_positions_are_uniform() {
    let cfg = SimConfig::reference();
    let s = generate_scenario(3, 10_000, 0, &[0], &cfg).unwrap();
    let n = s.users.len() as f64;
    let mx = s.users.iter().map(|u| u.position.x).sum::<f64>() / n;
    let my = s.users.iter().map(|u| u.position.y).sum::<f64>() / n;
    let ma = s.users.iter().map(|u| u.azimuth).sum::<f64>() / n;
    assert!((mx - 5.0).abs() < 0.1, "{mx}");
    assert!((my - 5.0).abs() < 0.1, "{my}");
    assert!((ma - PI).abs() < 0.1, "{ma}");
    for u in &s.users {
        assert!((0.0..=10.0).contains(&u.position.x) && (0.0..=10.0).contains(&u.position.y));
        assert!((0.0..2.0 * PI).contains(&u.azimuth));
        assert_eq!(u.normal().z, 0.0);
    }
    // about a tenth in each tenth of the room
    let strip = s.users.iter().filter(|u| u.position.x < 1.0).count();
    assert!((800..1200).contains(&strip), "{strip}");
}

#[test]
fn obstacles_respect_the_room_and_keep_out() {
    let cfg = SimConfig::reference();
    for seed in 0..50 {
        let s = generate_scenario(seed, 5, 6, &[0, 1, 2, 3], &cfg).unwrap();
        assert_eq!(s.obstacles.len(), 6);
        for b in &s.obstacles {
            let size = b.size();
            assert!((size - Vec3::new(1.0, 1.0, 1.6)).norm() < 1e-12);
            assert!(b.min.x >= 0.0 && b.min.y >= 0.0 && b.min.z == 0.0);
            assert!(b.max.x <= 10.0 && b.max.y <= 10.0);
            for p in &cfg.panels {
                assert!(b.surface_distance(&p.center) >= 0.3 - 1e-12);
            }
            for u in &s.users {
                assert!(!b.contains(&u.position));
            }
        }
    }
}

#[test]
fn more_obstacles_extend_fewer() {
    let cfg = SimConfig::reference();
    for seed in 0..20 {
        let few = generate_scenario(seed, 2, 2, &[0, 1], &cfg).unwrap();
        let many = generate_scenario(seed, 2, 6, &[0, 1], &cfg).unwrap();
        assert_eq!(few.users, many.users);
        assert_eq!(few.obstacles[..], many.obstacles[..2]);
    }
}

#[test]
fn impossible_placement_is_reported() {
    let mut cfg = SimConfig::reference();
    cfg.panel_clearance = 20.0;
    let e = generate_scenario(1, 1, 1, &[0], &cfg).unwrap_err();
    assert_eq!(e, ScenarioError::PlacementFailure);
    assert_eq!(e.code(), "scenario.placement_failure");
}

fn centre_user(azimuth: f64) -> User {
    User { position: Vec3::new(5.0, 5.0, 1.5), azimuth }
}

#[test]
fn pipeline_at_room_centre() {
    let cfg = small_link();
    let scn = fixed_scenario(11, vec![centre_user(2.0)], Vec::new(), &[0, 1, 2, 3], &cfg);
    let m = run_trial(&scn, &cfg, &mut GainMemo::new());
    let u = &m.users[0];
    assert!(u.rate > 0.0);
    assert!(u.position_error < 5e-3, "{}", u.position_error);
    assert!(u.orientation_error < 1e-2);
    assert!(!m.outage);
    assert!(u.route_truly_clear);
    assert_eq!(m.allocation.tau, vec![1.0]);
    assert_eq!(m.allocation.r_min, u.rate);
}

#[test]
fn facing_away_from_the_only_panel_is_an_outage() {
    let cfg = small_link();
    // panel 0 is behind the user
    let scn = fixed_scenario(12, vec![centre_user(0.0)], Vec::new(), &[0], &cfg);
    let m = run_trial(&scn, &cfg, &mut GainMemo::new());
    let u = &m.users[0];
    assert_eq!(u.localization_error, Some(LocalizationError::NoVisiblePanel));
    assert!(u.estimate.is_none());
    assert_eq!(u.rate, 0.0);
    assert!(u.route.is_empty());
    assert!(m.outage);
    assert_eq!(m.allocation.r_min, 0.0);
}

#[test]
fn trials_are_reproducible() {
    let cfg = small_link();
    let scn = generate_scenario(13, 3, 4, &[0, 1, 2, 3], &cfg).unwrap();
    let a = run_trial(&scn, &cfg, &mut GainMemo::new());
    let b = run_trial(&scn, &cfg, &mut GainMemo::new());
    assert_eq!(a, b);
    // a warm memo gives the same answer
    let mut memo = GainMemo::new();
    let _ = run_trial(&scn, &cfg, &mut memo);
    assert!(!memo.is_empty());
    assert_eq!(run_trial(&scn, &cfg, &mut memo), a);
}

#[test]
fn trial_metrics_invariants() {
    let cfg = small_link();
    for seed in 0..30 {
        let scn = generate_scenario(seed, 4, 4, &[0, 1, 2, 3], &cfg).unwrap();
        let m = run_trial(&scn, &cfg, &mut GainMemo::new());
        let mut served_min = f64::INFINITY;
        for (u, t) in m.users.iter().zip(&m.allocation.tau) {
            assert!(u.position_error >= 0.0 && u.orientation_error >= 0.0);
            assert!(u.rate >= 0.0);
            assert_eq!(u.estimate.is_some(), u.localization_error.is_none());
            if u.rate > 0.0 {
                served_min = served_min.min(t * u.rate);
                assert!(!u.route.is_empty());
            }
        }
        assert!(m.allocation.r_min <= served_min + 1e-9);
        assert_eq!(m.outage, m.users.iter().any(|u| u.rate == 0.0));
    }
}

fn rates_under_nested_obstacles(cfg: &SimConfig, seeds: u64) {
    let mut checked = 0;
    for seed in 0..seeds {
        let scn = generate_scenario(seed, 2, 6, &[0, 1, 2, 3], cfg).unwrap();
        let mut prev: Option<Vec<f64>> = None;
        for ob in 0..=6 {
            let s = Scenario { obstacles: scn.obstacles[..ob].to_vec(), ..scn.clone() };
            let rates: Vec<f64> = run_trial(&s, cfg, &mut GainMemo::new()).users.iter().map(|u| u.rate).collect();
            if let Some(p) = &prev {
                for (k, (a, b)) in p.iter().zip(&rates).enumerate() {
                    assert!(b <= a, "seed {seed}, user {k}: {a} -> {b} with {ob} obstacles");
                    checked += 1;
                }
            }
            prev = Some(rates);
        }
    }
    assert!(checked > 0);
}

#[test]
fn extra_obstacles_never_raise_a_rate() {
    rates_under_nested_obstacles(&small_link(), 60);
}

#[test]
fn extra_obstacles_never_raise_a_rate_with_exact_sensing() {
    // obstacles that do not shadow the emitters leave every estimate alone
    let mut cfg = small_link();
    cfg.optical.obstacles_block_light = false;
    cfg.sensing = Sensing::Oracle;
    rates_under_nested_obstacles(&cfg, 60);
}

fn tiny_spec(figure: Figure) -> SweepSpec {
    let mut s = SweepSpec::defaults(figure);
    s.trials = 4;
    s.phi_deg = vec![0.0, 180.0];
    s.elements = vec![16, 64];
    s.gamma_db = vec![90.0, 110.0, 130.0];
    s.cdf_points = 5;
    s
}

fn run_all(spec: &SweepSpec, cfg: &SimConfig) -> Vec<TrialRecord> {
    spec.jobs().into_iter().map(|(p, t)| run_job(spec, cfg, p, t).unwrap()).collect()
}

#[test]
fn sweep_tables_have_the_documented_shape() {
    let cfg = small_link();
    let headers = [
        (Figure::Fig4b, "phi_ue_deg,L,median_err_mm,p90_err_mm"),
        (Figure::Fig5, "gamma_t_db,L,mean_rate_bpshz"),
        (Figure::Fig6, "N,L,mean_rate_bpshz"),
        (Figure::Fig7, "gamma_t_db,L,Ob,mean_rate_bpshz"),
        (Figure::Fig8, "L,K,rmin_bpshz,cdf"),
    ];
    for (fig, header) in headers {
        let spec = tiny_spec(fig);
        assert!(spec.is_valid(&cfg));
        assert_eq!(Figure::parse(fig.name()), Some(fig));
        let recs = run_all(&spec, &cfg);
        assert_eq!(recs.len(), spec.points().len() * spec.trials);
        let t = aggregate(&spec, &cfg, &recs);
        assert_eq!(t.header, header);
        let cols = header.split(',').count();
        assert!(t.rows.iter().all(|r| r.len() == cols));
        let expect = match fig {
            Figure::Fig4b => 2 * 2,
            Figure::Fig5 => 3 * 3,
            Figure::Fig6 => 2 * 3,
            Figure::Fig7 => 3 * 3 * 3,
            Figure::Fig8 => 3 * 5,
        };
        assert_eq!(t.rows.len(), expect);
    }
    assert_eq!(Figure::parse("9"), None);
}

#[test]
fn sweep_aggregates_ignore_trial_order() {
    let cfg = small_link();
    for fig in [Figure::Fig5, Figure::Fig8] {
        let spec = tiny_spec(fig);
        let recs = run_all(&spec, &cfg);
        let t = aggregate(&spec, &cfg, &recs);
        let mut rev = recs.clone();
        rev.reverse();
        rev.rotate_left(3);
        assert_eq!(aggregate(&spec, &cfg, &rev), t);
        assert_eq!(aggregate(&spec, &cfg, &run_all(&spec, &cfg)), t);
    }
}

#[test]
fn orientation_sweep_at_room_centre() {
    let cfg = SimConfig::reference();
    let spec = tiny_spec(Figure::Fig4b);
    let recs = run_all(&spec, &cfg);
    let t = aggregate(&spec, &cfg, &recs);
    // rows: (0 deg, L=1), (0 deg, L=4), (180 deg, L=1), (180 deg, L=4)
    let v = |i: usize| match t.rows[i][2] {
        Cell::Real(x) => x,
        _ => unreachable!(),
    };
    assert!(v(0) < 2.0 && v(1) < 2.0 && v(3) < 2.0);
    assert_eq!(v(2), f64::INFINITY);
}

#[test]
fn panel_and_obstacle_counts_share_trial_seeds() {
    let spec = SweepSpec::defaults(Figure::Fig7);
    let pts = spec.points();
    assert_eq!(pts.len(), 9);
    assert!(pts.iter().all(|p| p.value == 0));
    assert_eq!(spec.trial_seed(0, 3), spec.trial_seed(0, 3));
    assert_ne!(spec.trial_seed(0, 3), spec.trial_seed(0, 4));
    assert_ne!(spec.trial_seed(1, 3), spec.trial_seed(0, 3));
}

#[test]
fn element_counts_share_trials_and_never_lower_a_rate() {
    let spec = SweepSpec {
        trials: 6,
        panel_counts: vec![2],
        elements: vec![16, 64],
        reduced_quadrature: (31, 60),
        ..SweepSpec::defaults(Figure::Fig6)
    };
    assert_eq!(spec.trial_seed(0, 2), spec.trial_seed(1, 2));
    let cfg = SimConfig::reference();
    for t in 0..spec.trials {
        let small = run_job(&spec, &cfg, 0, t).unwrap();
        let large = run_job(&spec, &cfg, 1, t).unwrap();
        assert_eq!(small.errors, large.errors);
        assert!(large.snr_units[0] >= small.snr_units[0], "trial {t}: {small:?} vs {large:?}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn seed_determines_the_scenario(seed: u64, k in 1usize..6, ob in 0usize..6) {
        let cfg = SimConfig::reference();
        let a = generate_scenario(seed, k, ob, &[0, 1, 2, 3], &cfg).unwrap();
        let b = generate_scenario(seed, k, ob, &[0, 1, 2, 3], &cfg).unwrap();
        prop_assert_eq!(a, b);
    }
}
