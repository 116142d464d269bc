//! Angular sweeps from each panel and the plane-straddle obstruction test.

use alloc::vec::Vec;
use num_traits::Float;

use crate::geometry::{ray_aabb_intersect, ray_exit_distance, signed_plane_distance, Aabb, Frame, Segment, Vec3};

pub const SPEED_OF_LIGHT: f64 = 3e8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepConfig {
    pub azimuth_span: f64,
    pub elevation_span: f64,
    /// Azimuth segment covered by one emitter of the ring.
    pub per_vcsel_azimuth: f64,
    pub angular_step: f64,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            azimuth_span: 120f64.to_radians(),
            elevation_span: 60f64.to_radians(),
            per_vcsel_azimuth: 5f64.to_radians(),
            angular_step: 1f64.to_radians(),
        }
    }
}

impl SweepConfig {
    pub fn is_valid(&self) -> bool {
        self.azimuth_span > 0.0
            && self.elevation_span > 0.0
            && self.angular_step > 0.0
            && self.angular_step <= self.per_vcsel_azimuth
    }

    pub fn azimuth_cells(&self) -> usize {
        cells(self.azimuth_span, self.angular_step)
    }

    pub fn elevation_cells(&self) -> usize {
        cells(self.elevation_span, self.angular_step)
    }

    /// Cell-centre azimuth of column `i`.
    pub fn azimuth(&self, i: usize) -> f64 {
        -0.5 * self.azimuth_span + (i as f64 + 0.5) * self.angular_step
    }

    pub fn elevation(&self, j: usize) -> f64 {
        -0.5 * self.elevation_span + (j as f64 + 0.5) * self.angular_step
    }

    /// Index of the emitter whose azimuth segment contains column `i`.
    pub fn vcsel_of(&self, i: usize) -> usize {
        let a = self.azimuth(i) + 0.5 * self.azimuth_span;
        (a / self.per_vcsel_azimuth) as usize
    }

    /// Grid cell whose centre is closest to the given sweep angles, if
    /// the direction falls inside the field of regard.
    pub fn nearest_cell(&self, azimuth: f64, elevation: f64) -> Option<(usize, usize)> {
        if azimuth.abs() > 0.5 * self.azimuth_span || elevation.abs() > 0.5 * self.elevation_span {
            return None;
        }
        let i = ((azimuth + 0.5 * self.azimuth_span) / self.angular_step) as usize;
        let j = ((elevation + 0.5 * self.elevation_span) / self.angular_step) as usize;
        Some((i.min(self.azimuth_cells() - 1), j.min(self.elevation_cells() - 1)))
    }
}

fn cells(span: f64, step: f64) -> usize {
    let n = span / step;
    let r = n.round();
    if (n - r).abs() < 1e-9 {
        r as usize
    } else {
        n.ceil() as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Hit {
    Obstacle(usize),
    Wall,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReflectionPoint {
    pub panel: usize,
    pub azimuth_index: usize,
    pub elevation_index: usize,
    pub azimuth: f64,
    pub elevation: f64,
    pub range: f64,
    pub point: Vec3,
    pub delay: f64,
    pub hit: Hit,
}

impl ReflectionPoint {
    pub fn is_obstacle(&self) -> bool {
        matches!(self.hit, Hit::Obstacle(_))
    }
}

/// Casts one ray per grid cell from the panel centre and records the first
/// surface it meets. Points come out row by row in elevation, azimuth
/// increasing within a row.
pub fn sweep_reflections(
    panel: usize,
    frame: &Frame,
    obstacles: &[Aabb],
    room: &Aabb,
    cfg: &SweepConfig,
) -> Vec<ReflectionPoint> {
    let (na, ne) = (cfg.azimuth_cells(), cfg.elevation_cells());
    let mut out = Vec::with_capacity(na * ne);
    for j in 0..ne {
        let el = cfg.elevation(j);
        for i in 0..na {
            let az = cfg.azimuth(i);
            let dir = frame.sweep_direction(az, el);
            let wall = ray_exit_distance(&frame.center, &dir, room).unwrap_or(0.0);
            let mut best = (wall, Hit::Wall);
            for (k, b) in obstacles.iter().enumerate() {
                if let Some(t) = ray_aabb_intersect(&frame.center, &dir, b) {
                    if t < best.0 {
                        best = (t, Hit::Obstacle(k));
                    }
                }
            }
            let (range, hit) = best;
            out.push(ReflectionPoint {
                panel,
                azimuth_index: i,
                elevation_index: j,
                azimuth: az,
                elevation: el,
                range,
                point: frame.center + dir * range,
                delay: 2.0 * range / SPEED_OF_LIGHT,
                hit,
            });
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObstructionTest {
    /// Angular step of the sweeps that produced the reflections; sets the
    /// lateral tolerance of the extent filter.
    pub angular_step: f64,
    /// Bare sign test with no extent filter.
    pub raw: bool,
    /// Two returns count as one surface when they are at most this many
    /// ray spacings apart; larger jumps are edges between objects.
    pub continuity: f64,
}

impl ObstructionTest {
    pub const DEFAULT_CONTINUITY: f64 = 4.0;

    pub fn new(cfg: &SweepConfig) -> Self {
        Self { angular_step: cfg.angular_step, raw: false, continuity: Self::DEFAULT_CONTINUITY }
    }
}

/// Unit normal of the vertical plane through the segment. `None` flags a
/// vertical segment, where the plane falls back to `d x x`.
pub fn segment_plane_normal(d: &Vec3) -> (Vec3, bool) {
    let c = d.cross(&Vec3::z());
    if c.norm() > 1e-9 * d.norm() {
        (c.normalize(), false)
    } else {
        (d.cross(&Vec3::x()).normalize(), true)
    }
}

/// `true` when some consecutive pair of obstacle returns straddles the plane
/// through the segment close enough to the segment itself.
pub fn link_obstructed(p0: &Vec3, p1: &Vec3, reflections: &[ReflectionPoint], test: &ObstructionTest) -> bool {
    debug_assert!(p0 != p1);
    let ds = p1 - p0;
    let len2 = ds.norm_squared();
    let (normal, _) = segment_plane_normal(&ds);
    let bounds = Segment::new(*p0, *p1).bounds();
    reflections.windows(2).any(|w| {
        let (a, b) = (&w[0], &w[1]);
        if !(a.is_obstacle() && b.is_obstacle())
            || a.panel != b.panel
            || a.elevation_index != b.elevation_index
            || a.azimuth_index + 1 != b.azimuth_index
        {
            return false;
        }
        let s1 = signed_plane_distance(&a.point, p0, &normal);
        let s2 = signed_plane_distance(&b.point, p0, &normal);
        if !(s1 * s2 < 0.0) {
            return false;
        }
        if test.raw {
            return true;
        }
        let spacing = a.range.max(b.range) * test.angular_step;
        if (b.point - a.point).norm() > test.continuity * spacing {
            return false;
        }
        let c = a.point + (b.point - a.point) * (s1 / (s1 - s2));
        let margin = spacing;
        let mu = (c - p0).dot(&ds) / len2;
        bounds.expanded(margin).contains(&c) && mu > 0.0 && mu < 1.0
    })
}

/// Link indicators for one scenario, indexed by position in the panel list.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FeasibilityMatrix {
    pub panels: usize,
    pub users: usize,
    ap_panel: Vec<bool>,
    panel_panel: Vec<bool>,
    panel_user: Vec<bool>,
}

impl FeasibilityMatrix {
    pub fn new(panels: usize, users: usize) -> Self {
        Self {
            panels,
            users,
            ap_panel: alloc::vec![false; panels],
            panel_panel: alloc::vec![false; panels * panels],
            panel_user: alloc::vec![false; panels * users],
        }
    }

    pub fn ap_panel(&self, i: usize) -> bool {
        self.ap_panel[i]
    }

    pub fn panel_panel(&self, i: usize, j: usize) -> bool {
        self.panel_panel[i * self.panels + j]
    }

    pub fn panel_user(&self, i: usize, k: usize) -> bool {
        self.panel_user[i * self.users + k]
    }

    pub fn set_ap_panel(&mut self, i: usize, v: bool) {
        self.ap_panel[i] = v;
    }

    /// Sets both orientations of the pair.
    pub fn set_panel_panel(&mut self, i: usize, j: usize, v: bool) {
        self.panel_panel[i * self.panels + j] = v;
        self.panel_panel[j * self.panels + i] = v;
    }

    pub fn set_panel_user(&mut self, i: usize, k: usize, v: bool) {
        self.panel_user[i * self.users + k] = v;
    }

    /// Every decision as `(kind, a, b, clear)`: AP-panel, panel pairs with
    /// `a < b`, then panel-user.
    pub fn entries(&self) -> Vec<(LinkKind, usize, usize, bool)> {
        let mut out = Vec::new();
        for i in 0..self.panels {
            out.push((LinkKind::ApPanel, 0, i, self.ap_panel(i)));
        }
        for i in 0..self.panels {
            for j in i + 1..self.panels {
                out.push((LinkKind::PanelPanel, i, j, self.panel_panel(i, j)));
            }
        }
        for i in 0..self.panels {
            for k in 0..self.users {
                out.push((LinkKind::PanelUser, i, k, self.panel_user(i, k)));
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LinkKind {
    ApPanel,
    PanelPanel,
    PanelUser,
}

impl LinkKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            LinkKind::ApPanel => "ap_panel",
            LinkKind::PanelPanel => "panel_panel",
            LinkKind::PanelUser => "panel_user",
        }
    }
}

/// Inputs of [`feasibility_matrix`] beyond the geometry.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeasibilityConfig {
    pub sweep: SweepConfig,
    pub raw: bool,
}

/// Sweeps every panel, pools the returns and decides each link. The AP sits
/// outside the sensed volume, so its links use the geometric test directly;
/// `ap_reach[i]` is false where the wall blocks the AP from panel `i`.
pub fn feasibility_matrix(
    panels: &[Frame],
    ap_position: &Vec3,
    ap_reach: &[bool],
    ue_positions: &[Vec3],
    obstacles: &[Aabb],
    room: &Aabb,
    cfg: &FeasibilityConfig,
) -> (FeasibilityMatrix, Vec<ReflectionPoint>) {
    let mut refl = Vec::new();
    for (i, f) in panels.iter().enumerate() {
        refl.extend(sweep_reflections(i, f, obstacles, room, &cfg.sweep));
    }
    let test = ObstructionTest { raw: cfg.raw, ..ObstructionTest::new(&cfg.sweep) };
    let mut fm = FeasibilityMatrix::new(panels.len(), ue_positions.len());
    for (i, f) in panels.iter().enumerate() {
        let reach = ap_reach.get(i).copied().unwrap_or(false);
        fm.set_ap_panel(i, reach && !crate::geometry::los_blocked(ap_position, &f.center, obstacles));
        for j in i + 1..panels.len() {
            fm.set_panel_panel(i, j, !link_obstructed(&f.center, &panels[j].center, &refl, &test));
        }
        for (k, ue) in ue_positions.iter().enumerate() {
            fm.set_panel_user(i, k, !link_obstructed(&f.center, ue, &refl, &test));
        }
    }
    (fm, refl)
}

/// The same matrix decided by exact segment-box intersection.
pub fn oracle_matrix(
    panels: &[Frame],
    ap_position: &Vec3,
    ap_reach: &[bool],
    ue_positions: &[Vec3],
    obstacles: &[Aabb],
) -> FeasibilityMatrix {
    use crate::geometry::los_blocked;
    let mut fm = FeasibilityMatrix::new(panels.len(), ue_positions.len());
    for (i, f) in panels.iter().enumerate() {
        let reach = ap_reach.get(i).copied().unwrap_or(false);
        fm.set_ap_panel(i, reach && !los_blocked(ap_position, &f.center, obstacles));
        for j in i + 1..panels.len() {
            fm.set_panel_panel(i, j, !los_blocked(&f.center, &panels[j].center, obstacles));
        }
        for (k, ue) in ue_positions.iter().enumerate() {
            fm.set_panel_user(i, k, !los_blocked(&f.center, ue, obstacles));
        }
    }
    fm
}
