//! Random indoor scenarios and the per-trial pipeline: optical readings,
//! localization, sensing, route choice, rates and time sharing.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;
use core::f64::consts::PI;

use num_traits::Float;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::geometry::{angle_between, los_blocked, Aabb, Frame, Vec3};
use crate::localization::{
    localize_best_panel, InitialGuess, LmConfig, LocalizationError, LocalizeConfig, Method, PanelMeasurements,
    PoseEstimate, RssEntry, RssVector,
};
use crate::mapping::{feasibility_matrix, oracle_matrix, FeasibilityConfig, FeasibilityMatrix, SweepConfig};
use crate::mmwave::{
    self, cascaded_gain, directional_gain_bound, effective_aperture, max_gain, path_loss, steering_phases,
    OmegaModel, PanelArray, QuadratureGrid, SteeringTarget,
};
use crate::optical::{received_power, BeamMode, NoiseMode, PhotoDetector, VcselAnchor};
use crate::routing::{best_route, enumerate_routes, maxmin_tdma, Allocation};

/// Stable 64-bit mix of a list of words (SplitMix64 finaliser folded over
/// the input).
pub fn derive_seed(parts: &[u64]) -> u64 {
    let mut h: u64 = 0x243F_6A88_85A3_08D3;
    for &p in parts {
        h = mix(h ^ mix(p.wrapping_add(0x9E37_79B9_7F4A_7C15)));
    }
    h
}

fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

const STREAM_USERS: u64 = 1;
const STREAM_OBSTACLES: u64 = 2;
const STREAM_NOISE: u64 = 3;

/// Square ring of emitters around the panel centre, corners included.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RingLayout {
    pub half_width: f64,
    pub per_side: usize,
}

impl Default for RingLayout {
    fn default() -> Self {
        Self { half_width: 0.125, per_side: 6 }
    }
}

/// Emitters walked around the ring from the lower-left corner.
pub fn vcsel_ring(frame: &Frame, modes: &[BeamMode], panel: usize, ring: &RingLayout) -> Vec<VcselAnchor> {
    let count = 4 * ring.per_side;
    let h = ring.half_width;
    let step = 8.0 * h / count as f64;
    (0..count)
        .map(|k| {
            let s = k as f64 * step;
            let side = (s / (2.0 * h)) as usize;
            let t = s - side as f64 * 2.0 * h;
            let (u, v) = match side {
                0 => (-h + t, -h),
                1 => (h, -h + t),
                2 => (h - t, h),
                _ => (-h, h - t),
            };
            VcselAnchor {
                position: frame.to_world(&Vec3::new(u, v, 0.0)),
                boresight: frame.normal,
                modes: modes.to_vec(),
                tone_id: (panel * count + k) as u32,
            }
        })
        .collect()
}

/// Where each emitter points while a user is being measured.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum AimPolicy {
    /// Straight at the user.
    #[default]
    Exact,
    /// At the centre of the sweep cell that contains the user direction.
    Quantized,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum NoiseKind {
    #[default]
    Deterministic,
    Sampled,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OpticalSetup {
    pub modes: Vec<BeamMode>,
    /// Detector template; the normal is replaced by each user's.
    pub detector: PhotoDetector,
    pub noise: NoiseKind,
    pub aim: AimPolicy,
    pub ring: RingLayout,
    /// Readings only arrive from emitters with a clear optical path.
    pub obstacles_block_light: bool,
}

/// How the transmit SNR enters the rate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SnrConvention {
    /// `l_p G_t G_r gamma G_route / sigma^2`.
    #[default]
    AsPrinted,
    /// `l_p G_t G_r gamma G_route`, `gamma` already being `P_t / sigma^2`.
    Transmit,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkSetup {
    pub wavelength: f64,
    pub m: usize,
    pub n: usize,
    pub element_side: f64,
    pub efficiency: f64,
    pub omega: OmegaModel,
    pub g_t: f64,
    pub g_r: f64,
    pub noise_variance: f64,
    pub gamma: f64,
    pub reference_distance: f64,
    pub exponent: f64,
    pub theta_max: f64,
    /// `(theta, phi)` samples; the panel-size default when `None`.
    pub quadrature: Option<(usize, usize)>,
    pub snr: SnrConvention,
}

impl LinkSetup {
    pub fn k0(&self) -> f64 {
        2.0 * PI / self.wavelength
    }

    pub fn grid(&self) -> QuadratureGrid {
        match self.quadrature {
            Some((t, p)) => QuadratureGrid::new(t, p, self.theta_max),
            None => QuadratureGrid::default_for(self.m, self.n, self.theta_max),
        }
    }

    pub fn array(&self, frame: Frame) -> PanelArray {
        let mut a = PanelArray::new(frame, self.m, self.n, self.element_side, self.efficiency);
        a.omega = self.omega;
        a
    }

    /// SNR per unit transmit SNR.
    fn snr_scale(&self) -> f64 {
        match self.snr {
            SnrConvention::AsPrinted => self.g_t * self.g_r / self.noise_variance,
            SnrConvention::Transmit => self.g_t * self.g_r,
        }
    }

    pub fn rate(&self, snr_unit: f64, gamma: f64) -> f64 {
        (gamma * snr_unit).ln_1p() / core::f64::consts::LN_2
    }
}

/// Where the link indicators come from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Sensing {
    /// Reflection sweeps and the plane test.
    #[default]
    Sweep,
    /// Exact segment-box intersection, for validating everything downstream.
    Oracle,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub room: Aabb,
    pub panels: Vec<Frame>,
    pub ap: Vec3,
    /// Panels the AP can illuminate through the wall.
    pub ap_reach: Vec<bool>,
    pub obstacle_size: Vec3,
    /// Obstacles keep this far from panel centres.
    pub panel_clearance: f64,
    pub optical: OpticalSetup,
    pub localize: LocalizeConfig,
    pub sweep: SweepConfig,
    pub raw_prop3: bool,
    pub sensing: Sensing,
    pub link: LinkSetup,
    /// Half-width in grid cells of the partial sum used to skip hopeless
    /// final-hop candidates; zero evaluates every candidate.
    pub prune_window: usize,
}

/// The four wall-centre panels of the reference room.
pub fn reference_panels(room: &Aabb, height: f64) -> Vec<Frame> {
    let (x, y) = (room.max.x, room.max.y);
    alloc::vec![
        Frame::on_wall(Vec3::new(0.0, y / 2.0, height), Vec3::x()),
        Frame::on_wall(Vec3::new(x, y / 2.0, height), -Vec3::x()),
        Frame::on_wall(Vec3::new(x / 2.0, 0.0, height), Vec3::y()),
        Frame::on_wall(Vec3::new(x / 2.0, y, height), -Vec3::y()),
    ]
}

impl SimConfig {
    pub fn reference() -> Self {
        let room = Aabb::new(Vec3::zeros(), Vec3::new(10.0, 10.0, 3.0));
        let panels = reference_panels(&room, 1.5);
        let ap = panels[0].center - panels[0].normal * 2.0;
        let lambda = 1e-2;
        Self {
            room,
            panels,
            ap,
            ap_reach: alloc::vec![true, false, false, false],
            obstacle_size: Vec3::new(1.0, 1.0, 1.6),
            panel_clearance: 0.3,
            optical: OpticalSetup {
                modes: alloc::vec![BeamMode::new(10e-3, 5.6e-6, 950e-9), BeamMode::new(10e-3, 1e-2, 950e-9)],
                detector: PhotoDetector::reference(Vec3::x()),
                noise: NoiseKind::Sampled,
                aim: AimPolicy::Exact,
                ring: RingLayout::default(),
                obstacles_block_light: true,
            },
            localize: LocalizeConfig {
                method: Method::Lm5,
                lm: LmConfig { initial_guess: InitialGuess::DualModeOr { fallback: Vec3::new(5.0, 5.0, 1.5), region: room }, ..LmConfig::default() },
                pd_area: 1e-4,
                region: room,
            },
            sweep: SweepConfig::default(),
            raw_prop3: false,
            sensing: Sensing::Sweep,
            link: LinkSetup {
                wavelength: lambda,
                m: 50,
                n: 50,
                element_side: lambda / 2.0,
                efficiency: 1.0,
                omega: OmegaModel::Literal,
                g_t: 10.0,
                g_r: 1.0,
                noise_variance: 1e-13,
                gamma: 1e13,
                reference_distance: 1.0,
                exponent: 2.0,
                theta_max: QuadratureGrid::HEMISPHERE,
                quadrature: None,
                snr: SnrConvention::AsPrinted,
            },
            prune_window: 6,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct User {
    pub position: Vec3,
    /// Detector azimuth in the horizontal plane.
    pub azimuth: f64,
}

impl User {
    pub fn normal(&self) -> Vec3 {
        Vec3::new(self.azimuth.cos(), self.azimuth.sin(), 0.0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub seed: u64,
    /// Global ids of the panels taking part.
    pub active: Vec<usize>,
    pub anchors: Vec<Vec<VcselAnchor>>,
    pub users: Vec<User>,
    pub obstacles: Vec<Aabb>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScenarioError {
    PlacementFailure,
}

impl ScenarioError {
    pub fn code(&self) -> &'static str {
        "scenario.placement_failure"
    }
}

impl core::fmt::Display for ScenarioError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str("could not place obstacles after 1000 attempts")
    }
}

const PLACEMENT_ATTEMPTS: usize = 1000;

/// Users and obstacles come from separate streams, and obstacles are drawn
/// one after another, so a larger obstacle count extends a smaller one.
pub fn generate_scenario(
    seed: u64,
    users: usize,
    obstacles: usize,
    active: &[usize],
    cfg: &SimConfig,
) -> Result<Scenario, ScenarioError> {
    let mut urng = ChaCha8Rng::seed_from_u64(derive_seed(&[seed, STREAM_USERS]));
    let room = &cfg.room;
    let height = cfg.panels.first().map_or(1.5, |p| p.center.z);
    let us: Vec<User> = (0..users)
        .map(|_| {
            let x = urng.random_range(room.min.x..=room.max.x);
            let y = urng.random_range(room.min.y..=room.max.y);
            let azimuth = urng.random_range(0.0..2.0 * PI);
            User { position: Vec3::new(x, y, height), azimuth }
        })
        .collect();
    let mut orng = ChaCha8Rng::seed_from_u64(derive_seed(&[seed, STREAM_OBSTACLES]));
    let size = cfg.obstacle_size;
    let keep_out: Vec<Aabb> = cfg.panels.iter().map(|p| Aabb::new(p.center, p.center).expanded(cfg.panel_clearance)).collect();
    let mut obs = Vec::with_capacity(obstacles);
    for _ in 0..obstacles {
        let mut placed = false;
        for _ in 0..PLACEMENT_ATTEMPTS {
            let x = orng.random_range(room.min.x..=room.max.x - size.x);
            let y = orng.random_range(room.min.y..=room.max.y - size.y);
            let b = Aabb::from_corner(Vec3::new(x, y, room.min.z), size);
            if keep_out.iter().any(|k| k.overlaps(&b)) || us.iter().any(|u| b.contains(&u.position)) {
                continue;
            }
            obs.push(b);
            placed = true;
            break;
        }
        if !placed {
            return Err(ScenarioError::PlacementFailure);
        }
    }
    Ok(Scenario {
        seed,
        active: active.to_vec(),
        anchors: anchors_for(cfg),
        users: us,
        obstacles: obs,
    })
}

/// Scenario with explicit users and obstacles.
pub fn fixed_scenario(seed: u64, users: Vec<User>, obstacles: Vec<Aabb>, active: &[usize], cfg: &SimConfig) -> Scenario {
    Scenario { seed, active: active.to_vec(), anchors: anchors_for(cfg), users, obstacles }
}

fn anchors_for(cfg: &SimConfig) -> Vec<Vec<VcselAnchor>> {
    cfg.panels
        .iter()
        .enumerate()
        .map(|(i, f)| vcsel_ring(f, &cfg.optical.modes, i, &cfg.optical.ring))
        .collect()
}

/// Readings every active panel collects from user `k`.
pub fn measure_user(scn: &Scenario, k: usize, cfg: &SimConfig) -> Vec<PanelMeasurements> {
    let user = &scn.users[k];
    let pd = PhotoDetector { normal: user.normal(), ..cfg.optical.detector.clone() };
    let mut out = Vec::new();
    for &p in &scn.active {
        let frame = &cfg.panels[p];
        let (az, el) = frame.sweep_angles(&(user.position - frame.center));
        let Some(cell) = cfg.sweep.nearest_cell(az, el) else {
            continue;
        };
        let aim_dir = frame.sweep_direction(cfg.sweep.azimuth(cell.0), cfg.sweep.elevation(cell.1));
        let mut anchors = Vec::new();
        let mut entries = Vec::new();
        for (i, a) in scn.anchors[p].iter().enumerate() {
            if cfg.optical.obstacles_block_light && los_blocked(&a.position, &user.position, &scn.obstacles) {
                continue;
            }
            let aimed = match cfg.optical.aim {
                AimPolicy::Exact => a.aimed_at(&user.position),
                AimPolicy::Quantized => VcselAnchor { boresight: aim_dir, ..a.clone() },
            };
            let slot = anchors.len();
            let mut any = false;
            for mode in 0..aimed.modes.len() {
                let noise = match cfg.optical.noise {
                    NoiseKind::Deterministic => NoiseMode::Deterministic,
                    NoiseKind::Sampled => NoiseMode::Sampled {
                        seed: derive_seed(&[scn.seed, STREAM_NOISE, k as u64, p as u64, i as u64, mode as u64]),
                    },
                };
                let s = received_power(&aimed, mode, &user.position, &pd, noise);
                if s.los_component > 0.0 {
                    entries.push(RssEntry { anchor: slot, mode, power: s.power });
                    any = true;
                }
            }
            if any {
                anchors.push(aimed);
            }
        }
        if !entries.is_empty() {
            out.push(PanelMeasurements { panel: p, anchors, rss: RssVector::new(entries) });
        }
    }
    out
}

pub fn localize_user(scn: &Scenario, k: usize, cfg: &SimConfig) -> Result<PoseEstimate, LocalizationError> {
    localize_best_panel(&measure_user(scn, k, cfg), &cfg.localize)
}

#[derive(Debug, Clone, PartialEq)]
pub struct UserOutcome {
    pub position: Vec3,
    pub estimate: Option<PoseEstimate>,
    pub localization_error: Option<LocalizationError>,
    /// `||r_hat - r||`, infinite without an estimate.
    pub position_error: f64,
    pub orientation_error: f64,
    /// Global panel ids, empty when no route is clear.
    pub route: Vec<usize>,
    /// Linear SNR of the chosen route per unit transmit SNR.
    pub snr_unit: f64,
    pub rate: f64,
    /// Whether the chosen route is really unobstructed.
    pub route_truly_clear: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialMetrics {
    pub seed: u64,
    pub active: Vec<usize>,
    pub users: Vec<UserOutcome>,
    pub feasibility: FeasibilityMatrix,
    pub allocation: Allocation,
    pub outage: bool,
}

impl TrialMetrics {
    pub fn rates_at(&self, link: &LinkSetup, gamma: f64) -> Vec<f64> {
        self.users.iter().map(|u| link.rate(u.snr_unit, gamma)).collect()
    }

    pub fn r_min_at(&self, link: &LinkSetup, gamma: f64) -> f64 {
        maxmin_tdma(&self.rates_at(link, gamma)).map(|a| a.r_min).unwrap_or(0.0)
    }
}

/// Final-hop gains already computed in this trial, keyed by user, last
/// panel, predecessor and the bits of the position estimate.
#[derive(Debug, Default, Clone)]
pub struct GainMemo {
    map: BTreeMap<(usize, usize, usize, [u64; 3], usize, usize), f64>,
}

impl GainMemo {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }
}

const AP_NODE: usize = usize::MAX;

fn bits(v: &Vec3) -> [u64; 3] {
    [v.x.to_bits(), v.y.to_bits(), v.z.to_bits()]
}

struct FinalHop {
    array: PanelArray,
    target: SteeringTarget,
    theta: f64,
    phi: f64,
}

fn final_hop(cfg: &SimConfig, last: usize, source: &Vec3, estimate: &Vec3, truth: &Vec3) -> FinalHop {
    let array = cfg.link.array(cfg.panels[last]);
    let target = SteeringTarget::toward(&array, source, estimate);
    let (theta, phi) = array.angles_to(truth);
    FinalHop { array, target, theta, phi }
}

/// Runs the whole pipeline on one scenario. Errors inside a stage are
/// recorded per user.
pub fn run_trial(scn: &Scenario, cfg: &SimConfig, memo: &mut GainMemo) -> TrialMetrics {
    let k_users = scn.users.len();
    let estimates: Vec<Result<PoseEstimate, LocalizationError>> =
        (0..k_users).map(|k| localize_user(scn, k, cfg)).collect();

    let frames: Vec<Frame> = scn.active.iter().map(|&p| cfg.panels[p]).collect();
    let reach: Vec<bool> = scn.active.iter().map(|&p| cfg.ap_reach.get(p).copied().unwrap_or(false)).collect();
    let sensed: Vec<Vec3> = estimates
        .iter()
        .zip(&scn.users)
        .map(|(e, u)| e.as_ref().map(|e| e.position).unwrap_or(u.position))
        .collect();
    let fm = match cfg.sensing {
        Sensing::Sweep => {
            let fcfg = FeasibilityConfig { sweep: cfg.sweep, raw: cfg.raw_prop3 };
            feasibility_matrix(&frames, &cfg.ap, &reach, &sensed, &scn.obstacles, &cfg.room, &fcfg).0
        }
        Sensing::Oracle => oracle_matrix(&frames, &cfg.ap, &reach, &sensed, &scn.obstacles),
    };

    let routes = enumerate_routes(frames.len(), frames.len());
    let link = &cfg.link;
    let lambda = link.wavelength;
    let k0 = link.k0();
    let grid = link.grid();
    let a_eff = effective_aperture(link.m, link.n, lambda);
    let hop_gain = a_eff * max_gain(link.efficiency, link.m, link.n);
    let scale = link.snr_scale();

    let mut users = Vec::with_capacity(k_users);
    for (k, user) in scn.users.iter().enumerate() {
        let truth = user.position;
        let (est, err) = match &estimates[k] {
            Ok(e) => (Some(e.clone()), None),
            Err(e) => (None, Some(e.clone())),
        };
        let aim = est.as_ref().map(|e| e.position);
        let mut outcome = UserOutcome {
            position: truth,
            position_error: est.as_ref().map_or(f64::INFINITY, |e| (e.position - truth).norm()),
            orientation_error: est.as_ref().map_or(f64::INFINITY, |e| angle_between(&e.orientation, &user.normal())),
            estimate: est,
            localization_error: err,
            route: Vec::new(),
            snr_unit: 0.0,
            rate: 0.0,
            route_truly_clear: false,
        };
        let Some(aim) = aim else {
            users.push(outcome);
            continue;
        };

        // Everything but the final-hop pattern gain, per clear route.
        let mut groups: BTreeMap<(usize, usize), f64> = BTreeMap::new();
        let mut prefix: Vec<Option<f64>> = Vec::with_capacity(routes.len());
        for r in &routes {
            if !crate::routing::route_clear(r, k, &fm) {
                prefix.push(None);
                continue;
            }
            let g: Vec<usize> = r.iter().map(|&i| scn.active[i]).collect();
            let mut nodes = Vec::with_capacity(g.len() + 2);
            nodes.push(cfg.ap);
            nodes.extend(g.iter().map(|&p| cfg.panels[p].center));
            nodes.push(truth);
            let lengths: Vec<f64> = nodes.windows(2).map(|w| (w[1] - w[0]).norm()).collect();
            let exps = alloc::vec![link.exponent; lengths.len()];
            let lp = path_loss(&lengths, &exps, lambda, link.reference_distance);
            let c = lp * hop_gain.powi(g.len() as i32 - 1) * a_eff * scale;
            let key = (g[g.len() - 1], if g.len() > 1 { g[g.len() - 2] } else { AP_NODE });
            let e = groups.entry(key).or_insert(0.0);
            *e = e.max(c);
            prefix.push(Some(c));
        }

        // Exact gains in order of optimistic value until nothing left can win.
        let mut order: Vec<((usize, usize), f64, f64)> = groups
            .iter()
            .map(|(&(last, pred), &c)| {
                let src = if pred == AP_NODE { cfg.ap } else { cfg.panels[pred].center };
                let hop = final_hop(cfg, last, &src, &aim, &truth);
                let bound = if cfg.prune_window == 0 {
                    f64::INFINITY
                } else {
                    let ph = steering_phases(&hop.array, &hop.target, k0);
                    c * directional_gain_bound(&hop.array, &ph, hop.theta, hop.phi, &hop.target, k0, &grid, cfg.prune_window)
                };
                ((last, pred), c, bound)
            })
            .collect();
        order.sort_by(|a, b| b.2.total_cmp(&a.2).then(a.0.cmp(&b.0)));
        let mut exact: BTreeMap<(usize, usize), f64> = BTreeMap::new();
        let mut best = 0.0;
        for &((last, pred), c, bound) in &order {
            if best > bound {
                break;
            }
            let key = (k, last, pred, bits(&aim), link.m, link.n);
            let g_l = match memo.map.get(&key) {
                Some(&g) => g,
                None => {
                    let src = if pred == AP_NODE { cfg.ap } else { cfg.panels[pred].center };
                    let hop = final_hop(cfg, last, &src, &aim, &truth);
                    let ph = steering_phases(&hop.array, &hop.target, k0);
                    let g = mmwave::directional_gain(&hop.array, &ph, hop.theta, hop.phi, &hop.target, k0, &grid)
                        .unwrap_or(0.0);
                    memo.map.insert(key, g);
                    g
                }
            };
            exact.insert((last, pred), g_l);
            if c * g_l > best {
                best = c * g_l;
            }
        }

        let snr_of = |r: &[usize]| -> f64 {
            let idx = routes.iter().position(|x| x.as_slice() == r).unwrap();
            let Some(c) = prefix[idx] else { return 0.0 };
            let g: Vec<usize> = r.iter().map(|&i| scn.active[i]).collect();
            let key = (g[g.len() - 1], if g.len() > 1 { g[g.len() - 2] } else { AP_NODE });
            exact.get(&key).map_or(0.0, |gl| c * gl)
        };
        let choice = best_route(&routes, k, &fm, |r| link.rate(snr_of(r), link.gamma));
        if choice.clear {
            outcome.route = choice.panels.iter().map(|&i| scn.active[i]).collect();
            outcome.snr_unit = snr_of(&choice.panels);
            outcome.rate = choice.rate;
            let mut nodes = alloc::vec![cfg.ap];
            nodes.extend(outcome.route.iter().map(|&p| cfg.panels[p].center));
            nodes.push(truth);
            outcome.route_truly_clear = nodes.windows(2).all(|w| !los_blocked(&w[0], &w[1], &scn.obstacles));
        }
        users.push(outcome);
    }

    let rates: Vec<f64> = users.iter().map(|u| u.rate).collect();
    let allocation = maxmin_tdma(&rates).unwrap_or(Allocation { tau: Vec::new(), r_min: 0.0, served: 0 });
    let outage = rates.iter().any(|&r| r <= 0.0);
    TrialMetrics { seed: scn.seed, active: scn.active.clone(), users, feasibility: fm, allocation, outage }
}

/// Cascaded route gain with every hop perfectly steered, for reference.
pub fn ideal_route_gain(cfg: &SimConfig, hops: usize) -> f64 {
    let a = cfg.link.array(cfg.panels[0]);
    let route: Vec<&PanelArray> = (0..hops).map(|_| &a).collect();
    cascaded_gain(&route, max_gain(a.efficiency, a.m, a.n), cfg.link.wavelength)
}
