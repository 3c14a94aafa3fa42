//! Deterministic procedural model of an indoor environment: textured
//! regions under controllable light, a synthetic camera, an ambient light
//! sensor, and the two emulated actuators (smart bulb, E-Ink marker display).

mod actuators;
mod marker;
mod render;
mod texture;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use actuators::{apply_bulb_command, BulbState, EInkState, LuxCurve, PendingMarker};
pub use marker::{
    reference_image, MarkerPattern, MarkerPlacement, MarkerSpec, DARK, LIGHT, REFERENCE_MARGIN, REFERENCE_SIZE,
};
pub use render::{
    light_response, marker_footprint, noise_sigma, noiseless_frame, read_light_sensor, read_light_sensor_with,
    render_region, render_region_with, render_region_with_noise, CameraNoise, Footprint, NoiselessFrame, RenderConfig,
    SENSOR_RELATIVE_NOISE,
};
pub use texture::TextureSpec;

/// A monitored area of the environment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Region {
    pub id: String,
    pub texture: TextureSpec,
    /// Current illuminance in lux.
    pub illuminance: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub marker: Option<MarkerPlacement>,
}

impl Region {
    pub fn new(id: impl Into<String>, texture: TextureSpec, illuminance: f64) -> Self {
        Self { id: id.into(), texture, illuminance, marker: None }
    }

    pub fn with_marker(mut self, marker: MarkerPlacement) -> Self {
        self.marker = Some(marker);
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.illuminance >= 0.0 && self.illuminance.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "region {} illuminance must be >= 0, got {}",
                self.id, self.illuminance
            )));
        }
        self.texture.validate()?;
        if let Some(m) = &self.marker {
            m.validate()?;
        }
        Ok(())
    }
}

/// All regions plus the bulb-command-to-lux map shared by their bulbs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvironmentState {
    pub regions: Vec<Region>,
    pub lux_curve: LuxCurve,
}

impl EnvironmentState {
    pub fn new(regions: Vec<Region>, lux_curve: LuxCurve) -> Result<Self> {
        let env = Self { regions, lux_curve };
        env.validate()?;
        Ok(env)
    }

    pub fn validate(&self) -> Result<()> {
        for (i, r) in self.regions.iter().enumerate() {
            r.validate()?;
            if self.regions[..i].iter().any(|o| o.id == r.id) {
                return Err(Error::InvalidArgument(format!("duplicate region id {}", r.id)));
            }
        }
        self.lux_curve.validate()
    }

    pub fn region(&self, id: &str) -> Result<&Region> {
        self.regions.iter().find(|r| r.id == id).ok_or_else(|| Error::NotFound(format!("region {id}")))
    }

    pub fn region_mut(&mut self, id: &str) -> Result<&mut Region> {
        self.regions.iter_mut().find(|r| r.id == id).ok_or_else(|| Error::NotFound(format!("region {id}")))
    }
}
