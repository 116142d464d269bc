//! Figure sweeps split into independent (point, trial) jobs plus an
//! order-insensitive reduction, so a caller can run the jobs on any number
//! of threads and still get identical tables.

use alloc::vec::Vec;
use core::f64::consts::PI;

use num_traits::Float;

use crate::geometry::Vec3;
use crate::mmwave::db_to_linear;
use crate::scenario::{derive_seed, fixed_scenario, generate_scenario, localize_user, run_trial, GainMemo, ScenarioError, SimConfig, User};
use crate::stats::{mean, median, quantile};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Figure {
    /// Localization error against user orientation.
    Fig4b,
    /// Mean rate against transmit SNR.
    Fig5,
    /// Mean rate against elements per panel.
    Fig6,
    /// Mean rate against transmit SNR for several obstacle counts.
    Fig7,
    /// Distribution of the scheduled minimum rate.
    Fig8,
}

impl Figure {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Fig4b => "4b",
            Self::Fig5 => "5",
            Self::Fig6 => "6",
            Self::Fig7 => "7",
            Self::Fig8 => "8",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "4b" => Self::Fig4b,
            "5" => Self::Fig5,
            "6" => Self::Fig6,
            "7" => Self::Fig7,
            "8" => Self::Fig8,
            _ => return None,
        })
    }

    pub fn header(&self) -> &'static str {
        match self {
            Self::Fig4b => "phi_ue_deg,L,median_err_mm,p90_err_mm",
            Self::Fig5 => "gamma_t_db,L,mean_rate_bpshz",
            Self::Fig6 => "N,L,mean_rate_bpshz",
            Self::Fig7 => "gamma_t_db,L,Ob,mean_rate_bpshz",
            Self::Fig8 => "L,K,rmin_bpshz,cdf",
        }
    }

    fn tag(&self) -> u64 {
        match self {
            Self::Fig4b => 4,
            Self::Fig5 => 5,
            Self::Fig6 => 6,
            Self::Fig7 => 7,
            Self::Fig8 => 8,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub figure: Figure,
    pub trials: usize,
    pub seed: u64,
    /// Active panel counts; `L` uses the first `L` panels of the layout.
    pub panel_counts: Vec<usize>,
    pub users: usize,
    /// Obstacle counts. Only Fig. 7 sweeps them; the others use the first.
    pub obstacles: Vec<usize>,
    pub gamma_db: Vec<f64>,
    /// Elements per panel (perfect squares), Fig. 6 only.
    pub elements: Vec<usize>,
    pub phi_deg: Vec<f64>,
    /// Final-hop quadrature for Fig. 6 when the link does not fix one.
    pub reduced_quadrature: (usize, usize),
    /// Number of points in the Fig. 8 CDF grid.
    pub cdf_points: usize,
}

impl SweepSpec {
    pub fn defaults(figure: Figure) -> Self {
        let gamma_db: Vec<f64> = (0..=8).map(|i| 90.0 + 5.0 * i as f64).collect();
        let mut s = Self {
            figure,
            trials: 2000,
            seed: 42,
            panel_counts: alloc::vec![1, 2, 4],
            users: 1,
            obstacles: alloc::vec![4],
            gamma_db,
            elements: alloc::vec![100, 400, 900, 1600],
            phi_deg: (0..36).map(|i| 10.0 * i as f64).collect(),
            reduced_quadrature: (61, 120),
            cdf_points: 101,
        };
        match figure {
            Figure::Fig4b => {
                s.panel_counts = alloc::vec![1, 4];
                s.obstacles = alloc::vec![0];
            }
            Figure::Fig7 => s.obstacles = alloc::vec![2, 4, 6],
            Figure::Fig8 => s.users = 5,
            _ => {}
        }
        s
    }

    pub fn is_valid(&self, base: &SimConfig) -> bool {
        let axis_ok = match self.figure {
            Figure::Fig4b => !self.phi_deg.is_empty(),
            Figure::Fig5 | Figure::Fig7 => !self.gamma_db.is_empty(),
            Figure::Fig6 => !self.elements.is_empty() && self.elements.iter().all(|&n| side(n).is_some()),
            Figure::Fig8 => self.cdf_points >= 2,
        };
        axis_ok
            && self.trials >= 1
            && self.users >= 1
            && !self.obstacles.is_empty()
            && !self.panel_counts.is_empty()
            && self.panel_counts.iter().all(|&l| l >= 1 && l <= base.panels.len())
    }

    /// The independent trial sets of the sweep. Axes evaluated after the
    /// fact (SNR) do not appear here.
    pub fn points(&self) -> Vec<Point> {
        let axis = match self.figure {
            Figure::Fig4b => self.phi_deg.len(),
            Figure::Fig6 => self.elements.len(),
            _ => 1,
        };
        let obstacles: &[usize] = if self.figure == Figure::Fig7 { &self.obstacles } else { &self.obstacles[..1] };
        let mut out = Vec::new();
        for value in 0..axis {
            for &l in &self.panel_counts {
                for &ob in obstacles {
                    out.push(Point { value, panels: l, obstacles: ob });
                }
            }
        }
        out
    }

    /// Every (point, trial) pair, point-major.
    pub fn jobs(&self) -> Vec<(usize, usize)> {
        let n = self.points().len();
        (0..n).flat_map(|p| (0..self.trials).map(move |t| (p, t))).collect()
    }

    /// Seed of one trial. Panel and obstacle counts are left out, so every
    /// setting sees the same users, noise and (nested) obstacles. The
    /// element count does not alter the scenario either, so it is left out
    /// too and every array size is compared on the same trials.
    pub fn trial_seed(&self, value: usize, trial: usize) -> u64 {
        let value = if self.figure == Figure::Fig6 { 0 } else { value };
        derive_seed(&[self.seed, self.figure.tag(), value as u64, trial as u64])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Point {
    /// Index along the figure's own axis (orientation or element count).
    pub value: usize,
    pub panels: usize,
    pub obstacles: usize,
}

/// What one trial contributes to a table.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialRecord {
    pub point: usize,
    pub trial: usize,
    /// Position error per user, m (infinite when localization failed).
    pub errors: Vec<f64>,
    /// Per-user SNR per unit transmit SNR on the chosen route.
    pub snr_units: Vec<f64>,
    pub r_min: f64,
}

fn side(n: usize) -> Option<usize> {
    let s = (n as f64).sqrt().round() as usize;
    (s >= 1 && s * s == n).then_some(s)
}

/// Base configuration adjusted for one point.
pub fn point_config(spec: &SweepSpec, base: &SimConfig, point: &Point) -> SimConfig {
    let mut cfg = base.clone();
    if spec.figure == Figure::Fig6 {
        let s = side(spec.elements[point.value]).expect("element counts are perfect squares");
        cfg.link.m = s;
        cfg.link.n = s;
        if cfg.link.quadrature.is_none() {
            cfg.link.quadrature = Some(spec.reduced_quadrature);
        }
    }
    cfg
}

pub fn run_job(spec: &SweepSpec, base: &SimConfig, point_index: usize, trial: usize) -> Result<TrialRecord, ScenarioError> {
    let point = spec.points()[point_index];
    let cfg = point_config(spec, base, &point);
    let active: Vec<usize> = (0..point.panels).collect();
    let seed = spec.trial_seed(point.value, trial);
    if spec.figure == Figure::Fig4b {
        let c = cfg.room.center();
        let height = cfg.panels.first().map_or(c.z, |p| p.center.z);
        // orientation measured from facing the first panel
        let azimuth = PI + spec.phi_deg[point.value].to_radians();
        let user = User { position: Vec3::new(c.x, c.y, height), azimuth };
        let scn = fixed_scenario(seed, alloc::vec![user], Vec::new(), &active, &cfg);
        let err = localize_user(&scn, 0, &cfg).map_or(f64::INFINITY, |e| (e.position - user.position).norm());
        return Ok(TrialRecord { point: point_index, trial, errors: alloc::vec![err], snr_units: Vec::new(), r_min: 0.0 });
    }
    let scn = generate_scenario(seed, spec.users, point.obstacles, &active, &cfg)?;
    let m = run_trial(&scn, &cfg, &mut GainMemo::new());
    Ok(TrialRecord {
        point: point_index,
        trial,
        errors: m.users.iter().map(|u| u.position_error).collect(),
        snr_units: m.users.iter().map(|u| u.snr_unit).collect(),
        r_min: m.allocation.r_min,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Cell {
    Int(i64),
    Real(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: &'static str,
    pub rows: Vec<Vec<Cell>>,
}

/// Reduces trial records into the figure's table. Records are sorted by
/// (point, trial) first, so the input order does not matter.
pub fn aggregate(spec: &SweepSpec, base: &SimConfig, records: &[TrialRecord]) -> Table {
    let mut recs: Vec<&TrialRecord> = records.iter().collect();
    recs.sort_by_key(|r| (r.point, r.trial));
    let points = spec.points();
    let of = |p: usize| recs.iter().filter(move |r| r.point == p).copied();
    let mut rows = Vec::new();
    let rate_mean = |p: usize, gamma: f64, cfg: &SimConfig| -> f64 {
        let rates: Vec<f64> = of(p).flat_map(|r| r.snr_units.iter().map(|&s| cfg.link.rate(s, gamma))).collect();
        mean(&rates)
    };
    match spec.figure {
        Figure::Fig4b => {
            for (i, pt) in points.iter().enumerate() {
                let mm: Vec<f64> = of(i).flat_map(|r| r.errors.iter().map(|e| e * 1e3)).collect();
                rows.push(alloc::vec![
                    Cell::Real(spec.phi_deg[pt.value]),
                    Cell::Int(pt.panels as i64),
                    Cell::Real(median(&mm)),
                    Cell::Real(quantile(&mm, 0.9)),
                ]);
            }
        }
        Figure::Fig5 | Figure::Fig7 => {
            for &g in &spec.gamma_db {
                for (i, pt) in points.iter().enumerate() {
                    let cfg = point_config(spec, base, pt);
                    let mut row = alloc::vec![Cell::Real(g), Cell::Int(pt.panels as i64)];
                    if spec.figure == Figure::Fig7 {
                        row.push(Cell::Int(pt.obstacles as i64));
                    }
                    row.push(Cell::Real(rate_mean(i, db_to_linear(g), &cfg)));
                    rows.push(row);
                }
            }
        }
        Figure::Fig6 => {
            for (i, pt) in points.iter().enumerate() {
                let cfg = point_config(spec, base, pt);
                rows.push(alloc::vec![
                    Cell::Int(spec.elements[pt.value] as i64),
                    Cell::Int(pt.panels as i64),
                    Cell::Real(rate_mean(i, cfg.link.gamma, &cfg)),
                ]);
            }
        }
        Figure::Fig8 => {
            let all: Vec<f64> = recs.iter().map(|r| r.r_min).collect();
            let top = all.iter().cloned().fold(0.0, f64::max).ceil().max(1.0);
            let step = top / (spec.cdf_points - 1) as f64;
            let grid: Vec<f64> = (0..spec.cdf_points).map(|j| j as f64 * step).collect();
            for (i, pt) in points.iter().enumerate() {
                let rm: Vec<f64> = of(i).map(|r| r.r_min).collect();
                let cdf = crate::stats::ecdf(&rm, &grid);
                for (x, c) in grid.iter().zip(cdf) {
                    rows.push(alloc::vec![Cell::Int(pt.panels as i64), Cell::Int(spec.users as i64), Cell::Real(*x), Cell::Real(c)]);
                }
            }
        }
    }
    Table { header: spec.figure.header(), rows }
}

/// Fraction of trials of a point whose minimum rate is zero.
pub fn outage_fraction(records: &[TrialRecord], point: usize) -> f64 {
    let rm: Vec<f64> = records.iter().filter(|r| r.point == point).map(|r| r.r_min).collect();
    rm.iter().filter(|&&r| r <= 0.0).count() as f64 / rm.len().max(1) as f64
}
