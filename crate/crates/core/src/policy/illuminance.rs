use serde::{Deserialize, Serialize};

use super::calibration::CalibrationCurve;
use crate::clock::SimTime;
use crate::error::{Error, Result};
use crate::vision::TextureClass;

pub const COARSE_OPTIMAL_LUX: f64 = 300.0;
pub const FINE_OPTIMAL_LUX: f64 = 750.0;
pub const DEFAULT_DEADBAND_FRACTION: f64 = 0.10;
pub const DEFAULT_SETTLE_S: f64 = 2.0;

/// Target illuminance for markerless tracking on a surface of this texture.
pub fn select_optimal_lux(texture: TextureClass) -> f64 {
    match texture {
        TextureClass::Coarse => COARSE_OPTIMAL_LUX,
        TextureClass::Fine => FINE_OPTIMAL_LUX,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IlluminancePolicyState {
    pub optimal_lux: f64,
    pub deadband_fraction: f64,
    pub last_command: Option<f64>,
    pub settle_until: SimTime,
    pub settle_s: f64,
}

impl Default for IlluminancePolicyState {
    fn default() -> Self {
        Self {
            optimal_lux: COARSE_OPTIMAL_LUX,
            deadband_fraction: DEFAULT_DEADBAND_FRACTION,
            last_command: None,
            settle_until: SimTime::ZERO,
            settle_s: DEFAULT_SETTLE_S,
        }
    }
}

impl IlluminancePolicyState {
    pub fn new(deadband_fraction: f64, settle_s: f64) -> Result<Self> {
        if !(deadband_fraction > 0.0 && deadband_fraction < 0.5) {
            return Err(Error::Config(format!("deadband_fraction must be in (0, 0.5), got {deadband_fraction}")));
        }
        if !(settle_s >= 0.0) {
            return Err(Error::Config(format!("settle time must be >= 0, got {settle_s}")));
        }
        Ok(Self { deadband_fraction, settle_s, ..Self::default() })
    }

    /// Follow the observed texture class.
    pub fn set_texture(&mut self, texture: TextureClass) {
        self.optimal_lux = select_optimal_lux(texture);
    }

    pub fn in_deadband(&self, measured_lux: f64) -> bool {
        (measured_lux - self.optimal_lux).abs() <= self.deadband_fraction * self.optimal_lux
    }
}

/// One control decision. Returns the brightness command to send, if any.
pub fn illuminance_control_step(
    state: &mut IlluminancePolicyState,
    measured_lux: f64,
    curve: &CalibrationCurve,
    now: SimTime,
) -> Result<Option<f64>> {
    curve.validate()?;
    if state.in_deadband(measured_lux) || now < state.settle_until {
        return Ok(None);
    }
    let command = curve.invert(state.optimal_lux).command;
    state.last_command = Some(command);
    state.settle_until = now + SimTime::from_secs_f64(state.settle_s);
    Ok(Some(command))
}
