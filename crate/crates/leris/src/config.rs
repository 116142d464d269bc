//! Run configuration: a TOML document whose omitted keys take the reference
//! indoor values. Angles are degrees and gains dB on the file side; both are
//! converted once, in [`RunConfig::to_sim`].

use std::path::Path;

use leris_core::localization::{InitialGuess, JacobianForm, LmConfig, LocalizeConfig, Method};
use leris_core::mapping::SweepConfig;
use leris_core::mmwave::{OmegaModel, QuadratureGrid};
use leris_core::optical::{BeamMode, PhotoDetector};
use leris_core::scenario::{
    reference_panels, AimPolicy, LinkSetup, NoiseKind, OpticalSetup, RingLayout, Sensing, SimConfig,
    SnrConvention,
};
use leris_core::sweep::{Figure, SweepSpec};
use leris_core::{Aabb, Vec3};
use log::info;
use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{0}")]
    Parse(String),
    #[error("{path}: {message}")]
    Validation { path: String, message: String },
}

impl ConfigError {
    pub fn code(&self) -> &'static str {
        match self {
            Self::Io { .. } => "config.io",
            Self::Parse(_) => "config.parse",
            Self::Validation { .. } => "config.validation",
        }
    }

    fn invalid(path: &str, message: impl Into<String>) -> Self {
        Self::Validation { path: path.to_string(), message: message.into() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub trials: usize,
    pub out_dir: String,
    pub room: RoomConfig,
    pub vcsel: VcselConfig,
    pub detector: DetectorConfig,
    pub sensing: SensingConfig,
    pub localization: LocalizationConfig,
    pub mmwave: MmwaveConfig,
    pub experiment: ExperimentConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 42,
            trials: 2000,
            out_dir: "out".into(),
            room: RoomConfig::default(),
            vcsel: VcselConfig::default(),
            detector: DetectorConfig::default(),
            sensing: SensingConfig::default(),
            localization: LocalizationConfig::default(),
            mmwave: MmwaveConfig::default(),
            experiment: ExperimentConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RoomConfig {
    pub size_m: [f64; 3],
    pub panel_height_m: f64,
    /// Distance of the AP behind the first panel, along its normal.
    pub ap_offset_m: f64,
    /// Which panels the AP reaches through the wall.
    pub ap_reaches: Vec<bool>,
    pub obstacle_size_m: [f64; 3],
    pub panel_clearance_m: f64,
}

impl Default for RoomConfig {
    fn default() -> Self {
        Self {
            size_m: [10.0, 10.0, 3.0],
            panel_height_m: 1.5,
            ap_offset_m: 2.0,
            ap_reaches: vec![true, false, false, false],
            obstacle_size_m: [1.0, 1.0, 1.6],
            panel_clearance_m: 0.3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VcselConfig {
    pub transmit_power_mw: f64,
    pub waist_um: f64,
    pub wavelength_nm: f64,
    pub second_mode_transmit_power_mw: f64,
    pub second_mode_waist_um: f64,
    pub ring_half_width_m: f64,
    pub emitters_per_side: usize,
    /// `exact` or `quantized`.
    pub aim: String,
    /// `sampled` or `deterministic`.
    pub noise: String,
    pub obstacles_block_light: bool,
}

impl Default for VcselConfig {
    fn default() -> Self {
        Self {
            transmit_power_mw: 10.0,
            waist_um: 5.6,
            wavelength_nm: 950.0,
            second_mode_transmit_power_mw: 10.0,
            second_mode_waist_um: 10_000.0,
            ring_half_width_m: 0.125,
            emitters_per_side: 6,
            aim: "exact".into(),
            noise: "sampled".into(),
            obstacles_block_light: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DetectorConfig {
    pub area_cm2: f64,
    pub fov_half_angle_deg: f64,
    pub responsivity_a_per_w: f64,
    pub load_resistance_ohm: f64,
    pub temperature_k: f64,
    pub noise_figure_db: f64,
    pub rin_db_per_hz: f64,
    pub optical_bandwidth_ghz: f64,
    /// Constant noise power replacing the signal-dependent one, W.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub noise_power_override_w: Option<f64>,
}

impl Default for DetectorConfig {
    fn default() -> Self {
        Self {
            area_cm2: 1.0,
            fov_half_angle_deg: 90.0,
            responsivity_a_per_w: 0.7,
            load_resistance_ohm: 50.0,
            temperature_k: 300.0,
            noise_figure_db: 5.0,
            rin_db_per_hz: -155.0,
            optical_bandwidth_ghz: 1.0,
            noise_power_override_w: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SensingConfig {
    pub azimuth_span_deg: f64,
    pub elevation_span_deg: f64,
    pub per_vcsel_azimuth_deg: f64,
    pub angular_step_deg: f64,
    pub raw_prop3: bool,
    /// `sweep` or `oracle`.
    pub source: String,
}

impl Default for SensingConfig {
    fn default() -> Self {
        Self {
            azimuth_span_deg: 120.0,
            elevation_span_deg: 60.0,
            per_vcsel_azimuth_deg: 5.0,
            angular_step_deg: 1.0,
            raw_prop3: false,
            source: "sweep".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LocalizationConfig {
    /// `lm5` or `dual3`.
    pub method: String,
    pub max_iterations: usize,
    /// `general` or `far_field`.
    pub jacobian: String,
    pub projected: bool,
    /// Seed the iteration from the dual-mode closed form when possible.
    pub dual_mode_seed: bool,
}

impl Default for LocalizationConfig {
    fn default() -> Self {
        Self {
            method: "lm5".into(),
            max_iterations: 100,
            jacobian: "general".into(),
            projected: true,
            dual_mode_seed: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MmwaveConfig {
    pub wavelength_m: f64,
    pub elements_m: usize,
    pub elements_n: usize,
    pub element_spacing_wavelengths: f64,
    pub efficiency: f64,
    pub transmit_gain_db: f64,
    pub receive_gain_db: f64,
    pub noise_variance_db: f64,
    pub transmit_snr_db: f64,
    pub reference_distance_m: f64,
    pub path_loss_exponent: f64,
    /// `hemi` or `sphere`.
    pub normalization: String,
    /// `literal` or `symmetric`.
    pub omega: String,
    /// `as_printed` or `transmit`.
    pub snr: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub quadrature: Option<[usize; 2]>,
    pub prune_window: usize,
}

impl Default for MmwaveConfig {
    fn default() -> Self {
        Self {
            wavelength_m: 1e-2,
            elements_m: 50,
            elements_n: 50,
            element_spacing_wavelengths: 0.5,
            efficiency: 1.0,
            transmit_gain_db: 10.0,
            receive_gain_db: 0.0,
            noise_variance_db: -130.0,
            transmit_snr_db: 130.0,
            reference_distance_m: 1.0,
            path_loss_exponent: 2.0,
            normalization: "hemi".into(),
            omega: "literal".into(),
            snr: "as_printed".into(),
            quadrature: None,
            prune_window: 6,
        }
    }
}

/// Sweep axes; an omitted list falls back to the figure's own default.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub panel_counts: Option<Vec<usize>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub users: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub obstacles: Option<Vec<usize>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma_db: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub elements: Option<Vec<usize>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub phi_deg: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reduced_quadrature: Option<[usize; 2]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cdf_points: Option<usize>,
}

fn positive(path: &str, v: f64) -> Result<f64, ConfigError> {
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(ConfigError::invalid(path, format!("must be positive, got {v}")))
    }
}

fn finite(path: &str, v: f64) -> Result<f64, ConfigError> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(ConfigError::invalid(path, format!("must be finite, got {v}")))
    }
}

fn at_least(path: &str, v: usize, min: usize) -> Result<usize, ConfigError> {
    if v >= min {
        Ok(v)
    } else {
        Err(ConfigError::invalid(path, format!("must be at least {min}, got {v}")))
    }
}

fn choice<T: Copy>(path: &str, v: &str, options: &[(&str, T)]) -> Result<T, ConfigError> {
    options.iter().find(|(k, _)| *k == v).map(|(_, t)| *t).ok_or_else(|| {
        let names: Vec<&str> = options.iter().map(|(k, _)| *k).collect();
        ConfigError::invalid(path, format!("expected one of {}, got {v:?}", names.join(", ")))
    })
}

fn from_db(log: bool, path: &str, db: f64) -> Result<f64, ConfigError> {
    let lin = leris_core::mmwave::db_to_linear(finite(path, db)?);
    if log {
        info!("{path} = {db} dB -> {lin:e} (linear)");
    }
    Ok(lin)
}

fn from_deg(log: bool, path: &str, deg: f64) -> f64 {
    let rad = deg.to_radians();
    if log {
        info!("{path} = {deg} deg -> {rad} rad");
    }
    rad
}

pub fn parse_str(text: &str) -> Result<RunConfig, ConfigError> {
    let cfg: RunConfig = toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
    cfg.validate()?;
    Ok(cfg)
}

pub fn parse_config(path: &Path) -> Result<RunConfig, ConfigError> {
    let text = std::fs::read_to_string(path)
        .map_err(|source| ConfigError::Io { path: path.display().to_string(), source })?;
    parse_str(&text)
}

impl RunConfig {
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serialises")
    }

    pub fn method(&self) -> Result<Method, ConfigError> {
        choice("localization.method", &self.localization.method, &[("lm5", Method::Lm5), ("dual3", Method::Dual3)])
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.build(false).map(|_| ())
    }

    /// Validates every field and builds the simulation configuration,
    /// logging each unit conversion.
    pub fn to_sim(&self) -> Result<SimConfig, ConfigError> {
        self.build(true)
    }

    fn build(&self, log: bool) -> Result<SimConfig, ConfigError> {
        at_least("trials", self.trials, 1)?;
        let r = &self.room;
        let size = Vec3::new(
            positive("room.size_m[0]", r.size_m[0])?,
            positive("room.size_m[1]", r.size_m[1])?,
            positive("room.size_m[2]", r.size_m[2])?,
        );
        let room = Aabb::new(Vec3::zeros(), size);
        let h = positive("room.panel_height_m", r.panel_height_m)?;
        if h >= size.z {
            return Err(ConfigError::invalid("room.panel_height_m", "must be below the ceiling"));
        }
        let panels = reference_panels(&room, h);
        if r.ap_reaches.len() != panels.len() {
            return Err(ConfigError::invalid("room.ap_reaches", format!("needs {} entries", panels.len())));
        }
        let ap = panels[0].center - panels[0].normal * positive("room.ap_offset_m", r.ap_offset_m)?;
        let obstacle_size = Vec3::new(
            positive("room.obstacle_size_m[0]", r.obstacle_size_m[0])?,
            positive("room.obstacle_size_m[1]", r.obstacle_size_m[1])?,
            positive("room.obstacle_size_m[2]", r.obstacle_size_m[2])?,
        );
        if obstacle_size.x > size.x || obstacle_size.y > size.y {
            return Err(ConfigError::invalid("room.obstacle_size_m", "larger than the room"));
        }
        let clearance = finite("room.panel_clearance_m", r.panel_clearance_m)?;
        if clearance < 0.0 {
            return Err(ConfigError::invalid("room.panel_clearance_m", "must not be negative"));
        }

        let v = &self.vcsel;
        let lambda_o = positive("vcsel.wavelength_nm", v.wavelength_nm)? * 1e-9;
        let modes = vec![
            BeamMode::new(
                positive("vcsel.transmit_power_mw", v.transmit_power_mw)? * 1e-3,
                positive("vcsel.waist_um", v.waist_um)? * 1e-6,
                lambda_o,
            ),
            BeamMode::new(
                positive("vcsel.second_mode_transmit_power_mw", v.second_mode_transmit_power_mw)? * 1e-3,
                positive("vcsel.second_mode_waist_um", v.second_mode_waist_um)? * 1e-6,
                lambda_o,
            ),
        ];
        let ring = RingLayout {
            half_width: positive("vcsel.ring_half_width_m", v.ring_half_width_m)?,
            per_side: at_least("vcsel.emitters_per_side", v.emitters_per_side, 2)?,
        };
        let aim = choice("vcsel.aim", &v.aim, &[("exact", AimPolicy::Exact), ("quantized", AimPolicy::Quantized)])?;
        let noise = choice(
            "vcsel.noise",
            &v.noise,
            &[("sampled", NoiseKind::Sampled), ("deterministic", NoiseKind::Deterministic)],
        )?;

        let d = &self.detector;
        let fov = positive("detector.fov_half_angle_deg", d.fov_half_angle_deg)?;
        if fov > 90.0 {
            return Err(ConfigError::invalid("detector.fov_half_angle_deg", format!("must be at most 90, got {fov}")));
        }
        let mut pd = PhotoDetector::reference(Vec3::x());
        pd.area = positive("detector.area_cm2", d.area_cm2)? * 1e-4;
        pd.fov_half_angle = from_deg(log, "detector.fov_half_angle_deg", fov);
        pd.responsivity = positive("detector.responsivity_a_per_w", d.responsivity_a_per_w)?;
        pd.load_resistance = positive("detector.load_resistance_ohm", d.load_resistance_ohm)?;
        pd.temperature = positive("detector.temperature_k", d.temperature_k)?;
        pd.noise_figure = from_db(log, "detector.noise_figure_db", d.noise_figure_db)?;
        pd.rin = from_db(log, "detector.rin_db_per_hz", d.rin_db_per_hz)?;
        pd.optical_bandwidth = positive("detector.optical_bandwidth_ghz", d.optical_bandwidth_ghz)? * 1e9;
        pd.noise_power_override = match d.noise_power_override_w {
            Some(w) => Some(positive("detector.noise_power_override_w", w)?),
            None => None,
        };

        let s = &self.sensing;
        let sweep = SweepConfig {
            azimuth_span: from_deg(log, "sensing.azimuth_span_deg", positive("sensing.azimuth_span_deg", s.azimuth_span_deg)?),
            elevation_span: from_deg(
                log,
                "sensing.elevation_span_deg",
                positive("sensing.elevation_span_deg", s.elevation_span_deg)?,
            ),
            per_vcsel_azimuth: from_deg(
                log,
                "sensing.per_vcsel_azimuth_deg",
                positive("sensing.per_vcsel_azimuth_deg", s.per_vcsel_azimuth_deg)?,
            ),
            angular_step: from_deg(log, "sensing.angular_step_deg", positive("sensing.angular_step_deg", s.angular_step_deg)?),
        };
        if s.azimuth_span_deg > 180.0 || s.elevation_span_deg > 180.0 {
            return Err(ConfigError::invalid("sensing", "spans must be at most 180 deg"));
        }
        if !sweep.is_valid() {
            return Err(ConfigError::invalid("sensing.angular_step_deg", "inconsistent sweep grid"));
        }
        let sensing = choice("sensing.source", &s.source, &[("sweep", Sensing::Sweep), ("oracle", Sensing::Oracle)])?;

        let l = &self.localization;
        let method = self.method()?;
        let jacobian = choice(
            "localization.jacobian",
            &l.jacobian,
            &[("general", JacobianForm::General), ("far_field", JacobianForm::FarField)],
        )?;
        let centre = Vec3::new(size.x / 2.0, size.y / 2.0, h);
        let lm = LmConfig {
            max_iterations: at_least("localization.max_iterations", l.max_iterations, 1)?,
            jacobian,
            projected: l.projected,
            initial_guess: if l.dual_mode_seed {
                InitialGuess::DualModeOr { fallback: centre, region: room }
            } else {
                InitialGuess::Point(centre)
            },
            ..LmConfig::default()
        };

        let m = &self.mmwave;
        let wavelength = positive("mmwave.wavelength_m", m.wavelength_m)?;
        let theta_max = choice(
            "mmwave.normalization",
            &m.normalization,
            &[("hemi", QuadratureGrid::HEMISPHERE), ("sphere", QuadratureGrid::SPHERE)],
        )?;
        if let Some([t, p]) = m.quadrature {
            at_least("mmwave.quadrature[0]", t, 8)?;
            at_least("mmwave.quadrature[1]", p, 8)?;
        }
        let efficiency = positive("mmwave.efficiency", m.efficiency)?;
        if efficiency > 1.0 {
            return Err(ConfigError::invalid("mmwave.efficiency", format!("must be at most 1, got {efficiency}")));
        }
        let link = LinkSetup {
            wavelength,
            m: at_least("mmwave.elements_m", m.elements_m, 1)?,
            n: at_least("mmwave.elements_n", m.elements_n, 1)?,
            element_side: positive("mmwave.element_spacing_wavelengths", m.element_spacing_wavelengths)? * wavelength,
            efficiency,
            omega: choice("mmwave.omega", &m.omega, &[("literal", OmegaModel::Literal), ("symmetric", OmegaModel::Symmetric)])?,
            g_t: from_db(log, "mmwave.transmit_gain_db", m.transmit_gain_db)?,
            g_r: from_db(log, "mmwave.receive_gain_db", m.receive_gain_db)?,
            noise_variance: from_db(log, "mmwave.noise_variance_db", m.noise_variance_db)?,
            gamma: from_db(log, "mmwave.transmit_snr_db", m.transmit_snr_db)?,
            reference_distance: positive("mmwave.reference_distance_m", m.reference_distance_m)?,
            exponent: positive("mmwave.path_loss_exponent", m.path_loss_exponent)?,
            theta_max,
            quadrature: m.quadrature.map(|[t, p]| (t, p)),
            snr: choice("mmwave.snr", &m.snr, &[("as_printed", SnrConvention::AsPrinted), ("transmit", SnrConvention::Transmit)])?,
        };

        Ok(SimConfig {
            room,
            panels,
            ap,
            ap_reach: r.ap_reaches.clone(),
            obstacle_size,
            panel_clearance: clearance,
            optical: OpticalSetup { modes, detector: pd, noise, aim, ring, obstacles_block_light: v.obstacles_block_light },
            localize: LocalizeConfig { method, lm, pd_area: d.area_cm2 * 1e-4, region: room },
            sweep,
            raw_prop3: s.raw_prop3,
            sensing,
            link,
            prune_window: m.prune_window,
        })
    }

    /// Sweep description for `figure` with this config's overrides.
    pub fn sweep_spec(&self, figure: Figure) -> Result<SweepSpec, ConfigError> {
        let e = &self.experiment;
        let mut s = SweepSpec::defaults(figure);
        s.trials = at_least("trials", self.trials, 1)?;
        s.seed = self.seed;
        if let Some(v) = &e.panel_counts {
            s.panel_counts = v.clone();
        }
        if let Some(v) = e.users {
            s.users = at_least("experiment.users", v, 1)?;
        }
        if let Some(v) = &e.obstacles {
            s.obstacles = v.clone();
        }
        if let Some(v) = &e.gamma_db {
            s.gamma_db = v.iter().map(|&g| finite("experiment.gamma_db", g)).collect::<Result<_, _>>()?;
        }
        if let Some(v) = &e.elements {
            s.elements = v.clone();
        }
        if let Some(v) = &e.phi_deg {
            s.phi_deg = v.iter().map(|&g| finite("experiment.phi_deg", g)).collect::<Result<_, _>>()?;
        }
        if let Some([t, p]) = e.reduced_quadrature {
            s.reduced_quadrature = (at_least("experiment.reduced_quadrature[0]", t, 8)?, at_least("experiment.reduced_quadrature[1]", p, 8)?);
        }
        if let Some(v) = e.cdf_points {
            s.cdf_points = v;
        }
        if !s.is_valid(&self.build(false)?) {
            return Err(ConfigError::invalid("experiment", format!("invalid sweep for figure {}", figure.name())));
        }
        Ok(s)
    }
}
