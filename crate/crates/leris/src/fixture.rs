//! JSON description of one panel's readings with the pose that produced
//! them, used by `leris localize`.

use leris_core::localization::{rss_forward_model, PanelMeasurements, RssEntry, RssVector};
use leris_core::optical::{BeamMode, VcselAnchor};
use leris_core::scenario::{reference_panels, vcsel_ring, RingLayout};
use leris_core::{Aabb, Vec3};
use serde::{Deserialize, Serialize};

/// Noiseless readings from the first reference panel, bundled with the binary.
pub const BUNDLED: &str = include_str!("../fixtures/localize_dual3.json");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModeSpec {
    pub transmit_power_w: f64,
    pub waist_m: f64,
    pub wavelength_m: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnchorSpec {
    pub position_m: [f64; 3],
    pub boresight: [f64; 3],
    pub tone_id: u32,
    pub modes: Vec<ModeSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Reading {
    pub anchor: usize,
    pub mode: usize,
    pub power_w: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Pose {
    pub position_m: [f64; 3],
    pub orientation: [f64; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Fixture {
    pub panel: usize,
    pub pd_area_m2: f64,
    pub region_min_m: [f64; 3],
    pub region_max_m: [f64; 3],
    pub anchors: Vec<AnchorSpec>,
    pub readings: Vec<Reading>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub truth: Option<Pose>,
}

fn arr(v: &Vec3) -> [f64; 3] {
    [v.x, v.y, v.z]
}

fn vec(a: &[f64; 3]) -> Vec3 {
    Vec3::new(a[0], a[1], a[2])
}

impl Fixture {
    /// Readings that `anchors` would deliver, without noise, to a detector
    /// at `position` facing `orientation`.
    pub fn from_forward_model(
        panel: usize,
        anchors: &[VcselAnchor],
        pd_area: f64,
        region: &Aabb,
        position: Vec3,
        orientation: Vec3,
    ) -> Self {
        let rss = rss_forward_model(&position, &orientation, anchors, pd_area);
        Self {
            panel,
            pd_area_m2: pd_area,
            region_min_m: arr(&region.min),
            region_max_m: arr(&region.max),
            anchors: anchors
                .iter()
                .map(|a| AnchorSpec {
                    position_m: arr(&a.position),
                    boresight: arr(&a.boresight),
                    tone_id: a.tone_id,
                    modes: a
                        .modes
                        .iter()
                        .map(|m| ModeSpec {
                            transmit_power_w: m.transmit_power,
                            waist_m: m.waist,
                            wavelength_m: m.wavelength,
                        })
                        .collect(),
                })
                .collect(),
            readings: rss.entries.iter().map(|e| Reading { anchor: e.anchor, mode: e.mode, power_w: e.power }).collect(),
            truth: Some(Pose { position_m: arr(&position), orientation: arr(&orientation) }),
        }
    }

    /// The bundled case: a detector at (3.2, 4.1, 1.5) m, tilted off the
    /// line to the first panel of the 10 m room, read by every other emitter
    /// of its ring in both beam modes.
    pub fn reference() -> Self {
        let room = Aabb::new(Vec3::zeros(), Vec3::new(10.0, 10.0, 3.0));
        let frame = reference_panels(&room, 1.5)[0];
        let modes = [BeamMode::new(10e-3, 5.6e-6, 950e-9), BeamMode::new(10e-3, 1e-2, 950e-9)];
        let r = Vec3::new(3.2, 4.1, 1.5);
        let n = (frame.center - r + Vec3::new(0.0, 0.8, 0.3)).normalize();
        let anchors: Vec<VcselAnchor> = vcsel_ring(&frame, &modes, 0, &RingLayout::default())
            .into_iter()
            .step_by(2)
            .map(|a| a.aimed_at(&r))
            .collect();
        Self::from_forward_model(0, &anchors, 1e-4, &room, r, n)
    }

    pub fn parse(text: &str) -> Result<Self, String> {
        serde_json::from_str(text).map_err(|e| e.to_string())
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("fixture serialises");
        s.push('\n');
        s
    }

    pub fn region(&self) -> Aabb {
        Aabb::new(vec(&self.region_min_m), vec(&self.region_max_m))
    }

    pub fn truth_position(&self) -> Option<Vec3> {
        self.truth.as_ref().map(|t| vec(&t.position_m))
    }

    pub fn truth_orientation(&self) -> Option<Vec3> {
        self.truth.as_ref().map(|t| vec(&t.orientation))
    }

    /// Checks that every reading names an existing anchor and mode.
    pub fn validate(&self) -> Result<(), String> {
        if !(self.pd_area_m2.is_finite() && self.pd_area_m2 > 0.0) {
            return Err("pd_area_m2 must be positive".into());
        }
        for (i, r) in self.readings.iter().enumerate() {
            let a = self.anchors.get(r.anchor).ok_or(format!("readings[{i}]: no anchor {}", r.anchor))?;
            if r.mode >= a.modes.len() {
                return Err(format!("readings[{i}]: anchor {} has no mode {}", r.anchor, r.mode));
            }
            if !r.power_w.is_finite() || r.power_w < 0.0 {
                return Err(format!("readings[{i}]: power must be finite and non-negative"));
            }
        }
        Ok(())
    }

    pub fn measurements(&self) -> PanelMeasurements {
        let anchors = self
            .anchors
            .iter()
            .map(|a| VcselAnchor {
                position: vec(&a.position_m),
                boresight: vec(&a.boresight),
                modes: a.modes.iter().map(|m| BeamMode::new(m.transmit_power_w, m.waist_m, m.wavelength_m)).collect(),
                tone_id: a.tone_id,
            })
            .collect();
        let rss = RssVector::new(
            self.readings.iter().map(|r| RssEntry { anchor: r.anchor, mode: r.mode, power: r.power_w }).collect(),
        );
        PanelMeasurements { panel: self.panel, anchors, rss }
    }
}
