use std::collections::BTreeSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::edge::PolicyMode;
use crate::error::{Error, Result};
use crate::policy::PredictorTable;
use crate::scene::{EInkState, LuxCurve, MarkerPlacement, Region, TextureSpec};
use crate::vision::{SceneChangeThresholds, CANONICAL_HEIGHT, CANONICAL_WIDTH};

fn default_period() -> f64 {
    5.0
}

fn default_bulb_latency() -> f64 {
    0.4
}

fn default_eink_latency() -> f64 {
    EInkState::DEFAULT_LATENCY_S
}

fn default_seed() -> u64 {
    1
}

fn default_max_size() -> u8 {
    crate::scene::MarkerSpec::MAX_SIZE_INDEX
}

fn default_width() -> usize {
    CANONICAL_WIDTH
}

fn default_height() -> usize {
    CANONICAL_HEIGHT
}

fn default_deadband() -> f64 {
    crate::policy::DEFAULT_DEADBAND_FRACTION
}

fn default_settle() -> f64 {
    crate::policy::DEFAULT_SETTLE_S
}

fn default_target() -> f64 {
    crate::policy::DEFAULT_TARGET_PERCENTAGE
}

fn default_calibration_steps() -> usize {
    crate::policy::DEFAULT_CALIBRATION_STEPS
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolicyParams {
    #[serde(default = "default_deadband")]
    pub deadband_fraction: f64,
    #[serde(default = "default_settle")]
    pub settle_s: f64,
    #[serde(default = "default_target")]
    pub target_percentage: f64,
    #[serde(default)]
    pub scene_change: SceneChangeThresholds,
    #[serde(default)]
    pub predictor: PredictorTable,
}

impl Default for PolicyParams {
    fn default() -> Self {
        Self {
            deadband_fraction: crate::policy::DEFAULT_DEADBAND_FRACTION,
            settle_s: crate::policy::DEFAULT_SETTLE_S,
            target_percentage: crate::policy::DEFAULT_TARGET_PERCENTAGE,
            scene_change: SceneChangeThresholds::default(),
            predictor: PredictorTable::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegionSpec {
    pub id: String,
    pub texture: TextureSpec,
    pub initial_lux: f64,
    #[serde(default)]
    pub policy: PolicyMode,
    #[serde(default)]
    pub marker: Option<MarkerPlacement>,
    /// Largest marker size the display can show.
    #[serde(default = "default_max_size")]
    pub max_marker_size: u8,
}

impl RegionSpec {
    pub fn bulb_id(&self) -> String {
        format!("bulb-{}", self.id)
    }

    pub fn eink_id(&self) -> Option<String> {
        self.marker.map(|_| format!("eink-{}", self.id))
    }

    pub fn to_region(&self) -> Region {
        let mut r = Region::new(self.id.clone(), self.texture.clone(), self.initial_lux);
        r.marker = self.marker;
        r
    }
}

/// Marker viewing pose change at a given time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrajectoryEvent {
    pub at_s: f64,
    pub region: String,
    pub distance_cm: f64,
    pub viewing_angle_deg: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CameraSpec {
    #[serde(default = "default_width")]
    pub width: usize,
    #[serde(default = "default_height")]
    pub height: usize,
}

impl Default for CameraSpec {
    fn default() -> Self {
        Self { width: CANONICAL_WIDTH, height: CANONICAL_HEIGHT }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    #[serde(default = "default_seed")]
    pub seed: u64,
    pub duration_s: f64,
    #[serde(default = "default_period")]
    pub sensor_period_s: f64,
    #[serde(default = "default_bulb_latency")]
    pub bulb_latency_s: f64,
    #[serde(default = "default_eink_latency")]
    pub eink_latency_s: f64,
    #[serde(default)]
    pub lux_curve: LuxCurve,
    /// Measure the bulb curve with a calibration sweep before the run
    /// instead of handing the edge the true curve.
    #[serde(default)]
    pub calibrate: bool,
    #[serde(default = "default_calibration_steps")]
    pub calibration_steps: usize,
    #[serde(default)]
    pub camera: CameraSpec,
    #[serde(default)]
    pub policy: PolicyParams,
    pub regions: Vec<RegionSpec>,
    #[serde(default)]
    pub trajectory: Vec<TrajectoryEvent>,
}

impl Scenario {
    /// Parse JSON, naming the offending field on failure.
    pub fn from_json(text: &str) -> Result<Scenario> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let s: Scenario = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            Error::Config(format!("scenario field `{path}`: {}", e.into_inner()))
        })?;
        s.validate()?;
        Ok(s)
    }

    pub fn load(path: &Path) -> Result<Scenario> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<()> {
        let cfg = |m: String| Err(Error::Config(m));
        if !(self.sensor_period_s > 0.0) {
            return cfg(format!("sensor_period_s must be > 0, got {}", self.sensor_period_s));
        }
        if !(self.duration_s >= self.sensor_period_s) {
            return cfg(format!(
                "duration_s ({}) must be >= sensor_period_s ({})",
                self.duration_s, self.sensor_period_s
            ));
        }
        if !(self.bulb_latency_s >= 0.0) || !(self.eink_latency_s > 0.0) {
            return cfg("actuator latencies must be >= 0 (bulb) and > 0 (E-Ink)".into());
        }
        if self.regions.is_empty() {
            return cfg("scenario has no regions".into());
        }
        if self.calibrate && self.calibration_steps < 2 {
            return cfg("calibration_steps must be >= 2".into());
        }
        self.lux_curve.validate().map_err(|e| Error::Config(format!("lux_curve: {e}")))?;
        if !(self.policy.deadband_fraction > 0.0 && self.policy.deadband_fraction < 0.5) {
            return cfg(format!("policy.deadband_fraction must be in (0, 0.5), got {}", self.policy.deadband_fraction));
        }
        if self.camera.width < 32 || self.camera.height < 32 {
            return cfg("camera must be at least 32x32".into());
        }
        let mut ids = BTreeSet::new();
        for r in &self.regions {
            if !ids.insert(r.id.as_str()) {
                return cfg(format!("duplicate region id {}", r.id));
            }
            if !(r.initial_lux >= 0.0) {
                return cfg(format!("region {}: initial_lux must be >= 0", r.id));
            }
            r.to_region().validate().map_err(|e| Error::Config(format!("region {}: {e}", r.id)))?;
            if r.policy == PolicyMode::Marker && r.marker.is_none() {
                return cfg(format!("region {} uses the marker policy but has no marker", r.id));
            }
        }
        for (i, t) in self.trajectory.iter().enumerate() {
            let Some(r) = self.regions.iter().find(|r| r.id == t.region) else {
                return cfg(format!("trajectory[{i}]: unknown region {}", t.region));
            };
            if r.marker.is_none() {
                return cfg(format!("trajectory[{i}]: region {} has no marker", t.region));
            }
            if !(t.at_s >= 0.0) || !(t.distance_cm > 0.0) || !(0.0..90.0).contains(&t.viewing_angle_deg) {
                return cfg(format!("trajectory[{i}]: need at_s >= 0, distance_cm > 0, angle in [0, 90)"));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{
        "name": "t", "duration_s": 10,
        "regions": [{"id": "a", "texture": {"kind": "flat", "level": 0.5}, "initial_lux": 80}]
    }"#;

    #[test]
    fn defaults_fill_in() {
        let s = Scenario::from_json(MINIMAL).unwrap();
        assert_eq!(s.sensor_period_s, 5.0);
        assert_eq!(s.bulb_latency_s, 0.4);
        assert_eq!(s.eink_latency_s, 1.0);
        assert_eq!(s.seed, 1);
        assert_eq!(s.regions[0].policy, PolicyMode::Illuminance);
    }

    #[test]
    fn errors_name_the_field() {
        let bad = MINIMAL.replace("\"initial_lux\": 80", "\"initial_lux\": \"bright\"");
        let msg = Scenario::from_json(&bad).unwrap_err().to_string();
        assert!(msg.contains("regions[0].initial_lux"), "{msg}");
        let bad = MINIMAL.replace("\"duration_s\": 10", "\"duration_s\": 1");
        assert!(matches!(Scenario::from_json(&bad), Err(Error::Config(_))));
    }

    #[test]
    fn trajectory_must_reference_marker_region() {
        let bad = MINIMAL.replace(
            "\"regions\"",
            "\"trajectory\": [{\"at_s\": 1, \"region\": \"a\", \"distance_cm\": 30, \"viewing_angle_deg\": 0}], \"regions\"",
        );
        assert!(Scenario::from_json(&bad).is_err());
    }
}
