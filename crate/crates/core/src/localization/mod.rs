//! Recovering the UE position and detector orientation from RSS readings.
//!
//! Two estimators live here: an iterative Levenberg-Marquardt fit that
//! eliminates the orientation by a constrained linear solve at every
//! candidate position, and a three-anchor closed form that uses two beam
//! modes per anchor to get ranges directly.

mod closed_form;
mod lm;
mod secular;

use alloc::boxed::Box;
use alloc::vec::Vec;
use nalgebra::{DVector, Dyn, OMatrix, U3};
use num_traits::Float;

use crate::geometry::{Aabb, Vec3};
use crate::optical::{beam_radius, BeamMode, VcselAnchor};

pub use closed_form::{
    dual_mode_range, estimated_distance, orientation_from_ranges, range_error, trilaterate,
    OrientationSolution,
};
pub use lm::{localize_lm, localize_lm_traced, residual_jacobian, residuals_fixed_normal, InitialGuess, JacobianForm, LmConfig};
pub use secular::{solve_orientation_given_position, Secular};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum LocalizationError {
    #[error("too few usable measurements: need {needed}, have {have}")]
    TooFewMeasurements { needed: usize, have: usize },
    #[error("anchor direction matrix is rank deficient")]
    RankDeficient,
    #[error("no unit-norm orientation fits the measurements")]
    NoUnitNormSolution,
    #[error("iteration limit reached before convergence")]
    MaxIterations(Box<PoseEstimate>),
    #[error("beam modes have (nearly) equal Rayleigh ranges")]
    DegenerateModes,
    #[error("input lies outside the domain of the closed form")]
    OutOfDomain,
    #[error("trilateration anchors are collinear")]
    CollinearAnchors,
    #[error("range spheres do not intersect")]
    NoRealIntersection,
    #[error("both trilateration roots lie inside the feasible region")]
    AmbiguousSolution,
    #[error("no trilateration root lies inside the feasible region")]
    NoFeasibleRoot,
    #[error("anchor direction matrix is singular")]
    SingularDirectionMatrix,
    #[error("no panel has enough visible anchors")]
    NoVisiblePanel,
}

impl LocalizationError {
    /// Short machine-readable name.
    pub fn code(&self) -> &'static str {
        match self {
            Self::TooFewMeasurements { .. } => "too_few_measurements",
            Self::RankDeficient => "rank_deficient",
            Self::NoUnitNormSolution => "no_unit_norm_solution",
            Self::MaxIterations(_) => "max_iterations",
            Self::DegenerateModes => "degenerate_modes",
            Self::OutOfDomain => "out_of_domain",
            Self::CollinearAnchors => "collinear_anchors",
            Self::NoRealIntersection => "no_real_intersection",
            Self::AmbiguousSolution => "ambiguous_solution",
            Self::NoFeasibleRoot => "no_feasible_root",
            Self::SingularDirectionMatrix => "singular_direction_matrix",
            Self::NoVisiblePanel => "no_visible_panel",
        }
    }
}

/// One RSS reading tied to an anchor (index into an anchor slice) and mode.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RssEntry {
    pub anchor: usize,
    pub mode: usize,
    pub power: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct RssVector {
    pub entries: Vec<RssEntry>,
}

impl RssVector {
    pub fn new(entries: Vec<RssEntry>) -> Self {
        Self { entries }
    }

    /// Entries of one mode with strictly positive power.
    pub fn usable(&self, mode: usize) -> impl Iterator<Item = &RssEntry> + '_ {
        self.entries.iter().filter(move |e| e.mode == mode && e.power > 0.0)
    }

    /// Entries of every mode with strictly positive power.
    pub fn usable_all(&self) -> impl Iterator<Item = &RssEntry> + '_ {
        self.entries.iter().filter(|e| e.power > 0.0)
    }

    pub fn power_of(&self, anchor: usize, mode: usize) -> Option<f64> {
        self.entries
            .iter()
            .find(|e| e.anchor == anchor && e.mode == mode)
            .map(|e| e.power)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PoseEstimate {
    pub position: Vec3,
    pub orientation: Vec3,
    /// Norm of the model residual over the fitted readings, W.
    pub residual_norm: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Panel whose readings produced this estimate, when chosen among several.
    pub panel: Option<usize>,
}

/// `2 P_t A / (pi w(d)^2)`: received power per unit of `n . u`.
pub fn beta(mode: &BeamMode, pd_area: f64, d: f64) -> f64 {
    let w = beam_radius(mode, d);
    2.0 * mode.transmit_power * pd_area / (core::f64::consts::PI * w * w)
}

/// Noiseless readings `P_i = beta_i(d_i) (n . u_i)` for every anchor and
/// mode, clamped to zero where the detector faces away.
pub fn rss_forward_model(r: &Vec3, n: &Vec3, anchors: &[VcselAnchor], pd_area: f64) -> RssVector {
    let mut entries = Vec::new();
    for (i, a) in anchors.iter().enumerate() {
        let v = a.position - r;
        let d = v.norm();
        debug_assert!(d > 0.0);
        let cos = n.dot(&(v / d));
        for (m, mode) in a.modes.iter().enumerate() {
            let power = if cos > 0.0 { beta(mode, pd_area, d) * cos } else { 0.0 };
            entries.push(RssEntry { anchor: i, mode: m, power });
        }
    }
    RssVector { entries }
}

/// Rows `beta_i(d_i) u_i^T` of the linear model `V(r) n = p`, restricted to
/// the given entries, and the matching power vector.
pub(crate) fn design_matrix(
    r: &Vec3,
    anchors: &[VcselAnchor],
    entries: &[RssEntry],
    pd_area: f64,
) -> (OMatrix<f64, Dyn, U3>, DVector<f64>) {
    let mut v = OMatrix::<f64, Dyn, U3>::zeros(entries.len());
    let mut p = DVector::zeros(entries.len());
    for (row, e) in entries.iter().enumerate() {
        let a = &anchors[e.anchor];
        let s = a.position - r;
        let d = s.norm();
        let b = beta(&a.modes[e.mode], pd_area, d);
        let u = s / d;
        for c in 0..3 {
            v[(row, c)] = b * u[c];
        }
        p[row] = e.power;
    }
    (v, p)
}

// ---------------------------------------------------------------------------
// Multi-panel selection

/// Solver used per panel.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    /// Iterative fit over all visible readings (at least five).
    Lm5,
    /// Dual-mode closed form on three anchors.
    Dual3,
}

impl Method {
    pub fn min_anchors(self) -> usize {
        match self {
            Method::Lm5 => 5,
            Method::Dual3 => 3,
        }
    }
}

/// Everything one panel measured for one user.
#[derive(Debug, Clone)]
pub struct PanelMeasurements {
    pub panel: usize,
    pub anchors: Vec<VcselAnchor>,
    pub rss: RssVector,
}

impl PanelMeasurements {
    /// Anchors that delivered a positive reading in every listed mode.
    fn anchors_with_modes(&self, modes: &[usize]) -> Vec<usize> {
        (0..self.anchors.len())
            .filter(|&i| {
                modes
                    .iter()
                    .all(|&m| self.rss.power_of(i, m).is_some_and(|p| p > 0.0))
            })
            .collect()
    }
}

/// Settings for [`localize_best_panel`].
#[derive(Debug, Clone, PartialEq)]
pub struct LocalizeConfig {
    pub method: Method,
    pub lm: LmConfig,
    pub pd_area: f64,
    /// Region the UE is known to be in (the room); resolves mirror roots.
    pub region: Aabb,
}

/// Three anchors spanning the largest triangle; ties go to lower indices.
fn widest_triple(anchors: &[VcselAnchor], idx: &[usize]) -> Option<[usize; 3]> {
    let mut best: Option<([usize; 3], f64)> = None;
    for a in 0..idx.len() {
        for b in a + 1..idx.len() {
            for c in b + 1..idx.len() {
                let (i, j, k) = (idx[a], idx[b], idx[c]);
                let p = anchors[i].position;
                let area = (anchors[j].position - p).cross(&(anchors[k].position - p)).norm();
                if best.is_none_or(|(_, s)| area > s) {
                    best = Some(([i, j, k], area));
                }
            }
        }
    }
    best.map(|(t, _)| t)
}

/// Closed-form estimate from one panel's dual-mode readings.
pub fn localize_dual3(
    m: &PanelMeasurements,
    pd_area: f64,
    region: &Aabb,
) -> Result<PoseEstimate, LocalizationError> {
    let idx = m.anchors_with_modes(&[0, 1]);
    if idx.len() < 3 {
        return Err(LocalizationError::TooFewMeasurements { needed: 3, have: idx.len() });
    }
    let tri = widest_triple(&m.anchors, &idx).ok_or(LocalizationError::CollinearAnchors)?;
    let mut ranges = [0.0; 3];
    let mut pos = [Vec3::zeros(); 3];
    let mut pa = [0.0; 3];
    for (k, &i) in tri.iter().enumerate() {
        let a = &m.anchors[i];
        let p_a = m.rss.power_of(i, 0).unwrap_or(0.0);
        let p_b = m.rss.power_of(i, 1).unwrap_or(0.0);
        ranges[k] = dual_mode_range(p_a, p_b, &a.modes[0], &a.modes[1], pd_area)?;
        pos[k] = a.position;
        pa[k] = p_a;
    }
    let r = trilaterate(&pos, &ranges, region)?;
    let modes = [m.anchors[tri[0]].modes[0], m.anchors[tri[1]].modes[0], m.anchors[tri[2]].modes[0]];
    let o = orientation_from_ranges(&r, &pos, &pa, &modes, &ranges, pd_area)?;
    let entries: Vec<RssEntry> = m.rss.usable_all().copied().collect();
    let (v, p) = design_matrix(&r, &m.anchors, &entries, pd_area);
    let residual = (v * o.normal - p).norm();
    Ok(PoseEstimate {
        position: r,
        orientation: o.normal,
        residual_norm: residual,
        iterations: 0,
        converged: true,
        panel: Some(m.panel),
    })
}

fn localize_one_panel(
    m: &PanelMeasurements,
    cfg: &LocalizeConfig,
) -> Result<PoseEstimate, LocalizationError> {
    let mut est = match cfg.method {
        Method::Dual3 => localize_dual3(m, cfg.pd_area, &cfg.region)?,
        Method::Lm5 => {
            match localize_lm(&m.anchors, &m.rss, cfg.pd_area, &cfg.lm) {
                Ok(e) => e,
                Err(LocalizationError::MaxIterations(best)) => *best,
                Err(e) => return Err(e),
            }
        }
    };
    est.panel = Some(m.panel);
    Ok(est)
}

/// Runs the chosen solver on every panel with enough visible anchors and
/// keeps the estimate whose residual is smallest relative to the measured
/// power on that panel.
pub fn localize_best_panel(
    groups: &[PanelMeasurements],
    cfg: &LocalizeConfig,
) -> Result<PoseEstimate, LocalizationError> {
    let need = cfg.method.min_anchors();
    let mut best: Option<(PoseEstimate, f64)> = None;
    let mut last_err = None;
    for g in groups {
        let visible = match cfg.method {
            Method::Lm5 => g.rss.usable(0).count(),
            Method::Dual3 => g.anchors_with_modes(&[0, 1]).len(),
        };
        if visible < need {
            continue;
        }
        match localize_one_panel(g, cfg) {
            Ok(e) => {
                let scale: f64 = g.rss.usable_all().map(|x| x.power * x.power).sum::<f64>().sqrt();
                let rel = e.residual_norm / scale;
                if best.as_ref().is_none_or(|(_, b)| rel < *b) {
                    best = Some((e, rel));
                }
            }
            Err(e) => last_err = Some(e),
        }
    }
    match (best, last_err) {
        (Some((e, _)), _) => Ok(e),
        (None, Some(e)) => Err(e),
        (None, None) => Err(LocalizationError::NoVisiblePanel),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::optical::{received_los_power, PhotoDetector};

    fn mode() -> BeamMode {
        BeamMode::new(10e-3, 5.6e-6, 950e-9)
    }

    fn anchor(p: Vec3) -> VcselAnchor {
        VcselAnchor { position: p, boresight: Vec3::x(), modes: alloc::vec![mode()], tone_id: 0 }
    }

    #[test]
    fn beta_at_zero_and_five_meters() {
        let m = mode();
        let b0 = beta(&m, 1e-4, 0.0);
        assert!((b0 - 2.0 * 0.01 * 1e-4 / (core::f64::consts::PI * 5.6e-6 * 5.6e-6)).abs() / b0 < 1e-14);
        let b5 = beta(&m, 1e-4, 5.0);
        assert!((b5 - 8.7e-6).abs() < 1e-7);
        assert!(beta(&m, 1e-4, 5.1) < b5);
    }

    #[test]
    fn forward_model_orthogonal_normal_gives_zero() {
        let anchors = [anchor(Vec3::new(0.0, 0.0, 3.0)), anchor(Vec3::new(1.0, 0.0, 3.0))];
        let r = Vec3::new(0.0, 0.0, 0.0);
        // both u_i lie in the x-z plane, n along y is orthogonal to both
        let out = rss_forward_model(&r, &Vec3::y(), &anchors, 1e-4);
        assert!(out.entries.iter().all(|e| e.power.abs() < 1e-30));
    }

    #[test]
    fn forward_model_anchor_overhead() {
        let anchors = [anchor(Vec3::new(1.0, 2.0, 3.0))];
        let r = Vec3::new(1.0, 2.0, 1.0);
        let out = rss_forward_model(&r, &Vec3::z(), &anchors, 1e-4);
        assert_eq!(out.entries[0].power, beta(&mode(), 1e-4, 2.0));
    }

    #[test]
    fn forward_model_matches_received_power_on_axis() {
        let r = Vec3::new(2.0, 3.0, 1.5);
        let n = Vec3::new(-0.8, 0.3, 0.2).normalize();
        let a = anchor(Vec3::new(0.0, 5.0, 1.5)).aimed_at(&r);
        let pd = PhotoDetector::reference(n);
        let p = received_los_power(&a, 0, &r, &pd);
        let q = rss_forward_model(&r, &n, core::slice::from_ref(&a), pd.area).entries[0].power;
        assert!((p - q).abs() / q < 1e-12);
    }
}
