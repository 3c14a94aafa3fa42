//! Control policies: illuminance setpoint tracking, dynamic marker
//! escalation, actuator calibration, constraint resolution and tracking
//! quality prediction.

mod calibration;
mod constraints;
mod illuminance;
mod marker;
mod predict;

pub use calibration::{
    calibrate, isotonic, sweep_commands, BulbActuator, CalibrationCurve, Inversion, LightSensor, CALIBRATION_SETTLE_S,
    DEFAULT_CALIBRATION_STEPS,
};
pub use constraints::{
    resolve_constraints, resolve_constraints_detailed, ControlConstraint, Resolution, LOWEST_PRIORITY,
};
pub use illuminance::{
    illuminance_control_step, select_optimal_lux, IlluminancePolicyState, COARSE_OPTIMAL_LUX,
    DEFAULT_DEADBAND_FRACTION, DEFAULT_SETTLE_S, FINE_OPTIMAL_LUX,
};
pub use marker::{
    marker_control_step, MarkerAction, MarkerControllerState, MarkerPhase, DEFAULT_TARGET_PERCENTAGE,
    MAX_LIGHT_ATTEMPTS,
};
pub use predict::{
    lux_band, predict_tracking, predict_tracking_with, BandRow, LuxBand, PredictorCell, PredictorTable, TextureLabel,
    TrackingClass, TrackingPrediction, GOOD_ERROR_CM, GUIDANCE_ADD_TEXTURE, GUIDANCE_MORE_LIGHT, GUIDANCE_MOVE,
};
