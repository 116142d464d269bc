//! Library entry points behind each subcommand. Each returns its rows and
//! leaves writing to the caller.

use leris_core::localization::{localize_best_panel, InitialGuess, LocalizeConfig, Method, PoseEstimate};
use leris_core::mapping::{feasibility_matrix, oracle_matrix, FeasibilityConfig, FeasibilityMatrix, Hit, ReflectionPoint};
use leris_core::routing::maxmin_tdma;
use leris_core::scenario::{derive_seed, generate_scenario, run_trial, GainMemo, SimConfig, TrialMetrics};
use leris_core::sweep::{aggregate, run_job, Figure, Table, TrialRecord};
use leris_core::Frame;
use rayon::prelude::*;

use crate::config::{ConfigError, RunConfig};
use crate::fixture::Fixture;

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{message}")]
    Usage { code: &'static str, message: String },
    #[error("{message}")]
    Model { code: String, message: String },
    #[error("{context}: {source}")]
    Io { context: String, source: std::io::Error },
}

impl RunError {
    pub fn code(&self) -> String {
        match self {
            Self::Config(e) => e.code().into(),
            Self::Usage { code, .. } => (*code).into(),
            Self::Model { code, .. } => code.clone(),
            Self::Io { .. } => "io.write".into(),
        }
    }

    /// Configuration and usage problems exit with 2, everything else with 3.
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Config(_) | Self::Usage { .. } => 2,
            _ => 3,
        }
    }

    pub fn usage(code: &'static str, message: impl Into<String>) -> Self {
        Self::Usage { code, message: message.into() }
    }

    fn model(code: &str, message: impl ToString) -> Self {
        let code = if code.contains('.') { code.to_string() } else { format!("localization.{code}") };
        Self::Model { code, message: message.to_string() }
    }
}

pub fn pool(threads: Option<usize>) -> Result<rayon::ThreadPool, RunError> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads {
        if n == 0 {
            return Err(RunError::usage("cli.threads", "--threads must be at least 1"));
        }
        b = b.num_threads(n);
    }
    b.build().map_err(|e| RunError::Model { code: "cli.thread_pool".into(), message: e.to_string() })
}

pub struct SweepOutput {
    pub table: Table,
    pub records: Vec<TrialRecord>,
}

/// Runs every (point, trial) job of `figure` on `pool`. Records come back
/// in job order whatever the thread count.
pub fn sweep(cfg: &RunConfig, figure: Figure, pool: &rayon::ThreadPool) -> Result<SweepOutput, RunError> {
    let spec = cfg.sweep_spec(figure)?;
    let base = cfg.to_sim()?;
    let jobs = spec.jobs();
    let records = pool
        .install(|| jobs.par_iter().map(|&(p, t)| run_job(&spec, &base, p, t)).collect::<Result<Vec<_>, _>>())
        .map_err(|e| RunError::Model { code: e.code().into(), message: e.to_string() })?;
    let table = aggregate(&spec, &base, &records);
    Ok(SweepOutput { table, records })
}

/// Scenario layout used by `simulate` and `map`: the first listed panel
/// count, user count and obstacle count, or the full reference setting.
fn layout(cfg: &RunConfig, sim: &SimConfig) -> (Vec<usize>, usize, usize) {
    let e = &cfg.experiment;
    let panels = e.panel_counts.as_ref().and_then(|v| v.first().copied()).unwrap_or(sim.panels.len());
    let users = e.users.unwrap_or(1);
    let obstacles = e.obstacles.as_ref().and_then(|v| v.first().copied()).unwrap_or(4);
    ((0..panels.min(sim.panels.len())).collect(), users, obstacles)
}

pub const TRIALS_HEADER: &str =
    "trial,user,x_m,y_m,azimuth_rad,position_error_m,orientation_error_rad,route,rate_bpshz,tau,r_min_bpshz";

/// Independent end-to-end trials; trial `t` uses seed `hash(seed, t)`.
pub fn simulate(cfg: &RunConfig, pool: &rayon::ThreadPool) -> Result<Vec<Vec<String>>, RunError> {
    let sim = cfg.to_sim()?;
    let (active, users, obstacles) = layout(cfg, &sim);
    if users == 0 {
        return Err(RunError::Config(ConfigError::Validation {
            path: "experiment.users".into(),
            message: "must be at least 1".into(),
        }));
    }
    let trials: Vec<(usize, leris_core::scenario::Scenario, TrialMetrics)> = pool
        .install(|| {
            (0..cfg.trials)
                .into_par_iter()
                .map(|t| {
                    let scn = generate_scenario(derive_seed(&[cfg.seed, t as u64]), users, obstacles, &active, &sim)?;
                    let m = run_trial(&scn, &sim, &mut GainMemo::new());
                    Ok((t, scn, m))
                })
                .collect::<Result<Vec<_>, leris_core::scenario::ScenarioError>>()
        })
        .map_err(|e| RunError::Model { code: e.code().into(), message: e.to_string() })?;
    let mut rows = Vec::new();
    for (t, scn, m) in &trials {
        for (k, u) in m.users.iter().enumerate() {
            let route: Vec<String> = u.route.iter().map(|p| p.to_string()).collect();
            rows.push(vec![
                t.to_string(),
                k.to_string(),
                u.position.x.to_string(),
                u.position.y.to_string(),
                scn.users[k].azimuth.to_string(),
                u.position_error.to_string(),
                u.orientation_error.to_string(),
                route.join("-"),
                u.rate.to_string(),
                m.allocation.tau[k].to_string(),
                m.allocation.r_min.to_string(),
            ]);
        }
    }
    Ok(rows)
}

pub const FEASIBILITY_HEADER: &str = "kind,a,b,sensed,oracle";
pub const REFLECTIONS_HEADER: &str = "panel,azimuth_deg,elevation_deg,range_m,x_m,y_m,z_m,delay_s,hit";

pub struct MapOutput {
    pub sensed: FeasibilityMatrix,
    pub oracle: FeasibilityMatrix,
    pub reflections: Vec<ReflectionPoint>,
}

impl MapOutput {
    /// Fraction of link decisions where the sweep agrees with exact geometry.
    pub fn agreement(&self) -> f64 {
        let s = self.sensed.entries();
        let o = self.oracle.entries();
        let same = s.iter().zip(&o).filter(|(a, b)| a.3 == b.3).count();
        same as f64 / s.len().max(1) as f64
    }

    pub fn feasibility_rows(&self) -> Vec<Vec<String>> {
        self.sensed
            .entries()
            .iter()
            .zip(self.oracle.entries())
            .map(|(s, o)| {
                vec![s.0.as_str().into(), s.1.to_string(), s.2.to_string(), u8::from(s.3).to_string(), u8::from(o.3).to_string()]
            })
            .collect()
    }

    pub fn reflection_rows(&self) -> Vec<Vec<String>> {
        self.reflections
            .iter()
            .map(|r| {
                let hit = match r.hit {
                    Hit::Wall => "wall".to_string(),
                    Hit::Obstacle(i) => format!("obstacle{i}"),
                };
                vec![
                    r.panel.to_string(),
                    r.azimuth.to_degrees().to_string(),
                    r.elevation.to_degrees().to_string(),
                    r.range.to_string(),
                    r.point.x.to_string(),
                    r.point.y.to_string(),
                    r.point.z.to_string(),
                    r.delay.to_string(),
                    hit,
                ]
            })
            .collect()
    }
}

/// Sweeps one scenario (seed `cfg.seed`) from every active panel, using the
/// true user positions.
pub fn map(cfg: &RunConfig) -> Result<MapOutput, RunError> {
    let sim = cfg.to_sim()?;
    let (active, users, obstacles) = layout(cfg, &sim);
    let scn = generate_scenario(cfg.seed, users, obstacles, &active, &sim)
        .map_err(|e| RunError::Model { code: e.code().into(), message: e.to_string() })?;
    let frames: Vec<Frame> = active.iter().map(|&p| sim.panels[p]).collect();
    let reach: Vec<bool> = active.iter().map(|&p| sim.ap_reach[p]).collect();
    let ues: Vec<_> = scn.users.iter().map(|u| u.position).collect();
    let fcfg = FeasibilityConfig { sweep: sim.sweep, raw: sim.raw_prop3 };
    let (sensed, reflections) = feasibility_matrix(&frames, &sim.ap, &reach, &ues, &scn.obstacles, &sim.room, &fcfg);
    let oracle = oracle_matrix(&frames, &sim.ap, &reach, &ues, &scn.obstacles);
    Ok(MapOutput { sensed, oracle, reflections })
}

pub const ALLOCATION_HEADER: &str = "user,rate_bpshz,tau,r_min_bpshz";

pub fn allocate(rates: &[f64]) -> Result<Vec<Vec<String>>, RunError> {
    if let Some(i) = rates.iter().position(|r| !r.is_finite() || *r < 0.0) {
        return Err(RunError::usage("cli.rates", format!("rate {i} must be finite and non-negative, got {}", rates[i])));
    }
    let a = maxmin_tdma(rates).map_err(|e| RunError::Model { code: e.code().into(), message: e.to_string() })?;
    Ok(rates
        .iter()
        .zip(&a.tau)
        .enumerate()
        .map(|(k, (r, t))| vec![k.to_string(), r.to_string(), t.to_string(), a.r_min.to_string()])
        .collect())
}

pub const POSE_HEADER: &str = "x_m,y_m,z_m,nx,ny,nz,residual_w,iterations";

/// Solves a fixture with `method`, searching inside the fixture's region.
pub fn localize(cfg: &RunConfig, fixture: &Fixture, method: Method) -> Result<PoseEstimate, RunError> {
    fixture.validate().map_err(|m| RunError::usage("cli.fixture", m))?;
    let sim = cfg.to_sim()?;
    let region = fixture.region();
    let mut lm = sim.localize.lm;
    if let InitialGuess::DualModeOr { .. } = lm.initial_guess {
        lm.initial_guess = InitialGuess::DualModeOr { fallback: region.center(), region };
    }
    let lc = LocalizeConfig { method, lm, pd_area: fixture.pd_area_m2, region };
    localize_best_panel(&[fixture.measurements()], &lc).map_err(|e| RunError::model(e.code(), e))
}

pub fn pose_row(e: &PoseEstimate) -> Vec<String> {
    let (r, n) = (e.position, e.orientation);
    vec![
        r.x.to_string(),
        r.y.to_string(),
        r.z.to_string(),
        n.x.to_string(),
        n.y.to_string(),
        n.z.to_string(),
        e.residual_norm.to_string(),
        e.iterations.to_string(),
    ]
}
