use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scene::LuxCurve;

/// Measured map from bulb command (percent) to lux.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationCurve {
    /// `(command, lux)`, commands strictly increasing, lux non-decreasing.
    pub points: Vec<(f64, f64)>,
}

/// Result of asking the curve for a command.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Inversion {
    pub command: f64,
    /// False when the requested lux lies outside the curve's range; the
    /// command is then the lowest one reaching the nearest end.
    pub reachable: bool,
}

/// Pool-adjacent-violators: least-squares non-decreasing fit, equal weights.
pub fn isotonic(values: &[f64]) -> Vec<f64> {
    // (sum, count) per block
    let mut blocks: Vec<(f64, usize)> = Vec::with_capacity(values.len());
    for &v in values {
        blocks.push((v, 1));
        while blocks.len() > 1 {
            let (s1, n1) = blocks[blocks.len() - 1];
            let (s0, n0) = blocks[blocks.len() - 2];
            if s0 / n0 as f64 <= s1 / n1 as f64 {
                break;
            }
            blocks.pop();
            *blocks.last_mut().unwrap() = (s0 + s1, n0 + n1);
        }
    }
    blocks.into_iter().flat_map(|(s, n)| std::iter::repeat_n(s / n as f64, n)).collect()
}

impl CalibrationCurve {
    /// Build a curve from raw `(command, lux)` samples, sorting by command
    /// and cleaning the lux values with isotonic regression.
    pub fn from_samples(mut samples: Vec<(f64, f64)>) -> Result<Self> {
        if samples.iter().any(|(c, l)| !c.is_finite() || !l.is_finite()) {
            return Err(Error::Calibration("non-finite calibration sample".into()));
        }
        samples.sort_by(|a, b| a.0.total_cmp(&b.0));
        let lux: Vec<f64> = samples.iter().map(|s| s.1).collect();
        let fitted = isotonic(&lux);
        let curve = Self { points: samples.iter().zip(fitted).map(|(s, l)| (s.0, l)).collect() };
        curve.validate()?;
        Ok(curve)
    }

    /// Ground-truth curve sampled from a scene lux curve.
    pub fn from_lux_curve(curve: &LuxCurve, steps: usize) -> Result<Self> {
        let commands = sweep_commands(steps)?;
        Self::from_samples(commands.into_iter().map(|c| (c, curve.lux(c))).collect())
    }

    pub fn validate(&self) -> Result<()> {
        if self.points.len() < 2 {
            return Err(Error::Calibration("curve needs at least 2 points".into()));
        }
        for w in self.points.windows(2) {
            if !(w[1].0 > w[0].0) {
                return Err(Error::Calibration("commands must be strictly increasing".into()));
            }
            if !(w[1].1 >= w[0].1) {
                return Err(Error::Calibration("lux must be non-decreasing".into()));
            }
        }
        Ok(())
    }

    pub fn min_lux(&self) -> f64 {
        self.points[0].1
    }

    pub fn max_lux(&self) -> f64 {
        self.points[self.points.len() - 1].1
    }

    /// Interpolated lux at `command`, flat beyond the end knots.
    pub fn lux_at(&self, command: f64) -> f64 {
        let pts = &self.points;
        if command <= pts[0].0 {
            return pts[0].1;
        }
        if command >= pts[pts.len() - 1].0 {
            return pts[pts.len() - 1].1;
        }
        let i = pts.partition_point(|p| p.0 <= command);
        let (a, b) = (pts[i - 1], pts[i]);
        a.1 + (b.1 - a.1) * (command - a.0) / (b.0 - a.0)
    }

    /// Lowest command whose interpolated lux reaches `lux`, clamped to
    /// `[0, 100]`.
    pub fn invert(&self, lux: f64) -> Inversion {
        let pts = &self.points;
        let clamp = |c: f64| c.clamp(0.0, 100.0);
        if lux > self.max_lux() {
            // Lowest command already at the maximum.
            let top = self.max_lux();
            let c = pts.iter().find(|p| p.1 >= top).map_or(pts[pts.len() - 1].0, |p| p.0);
            return Inversion { command: clamp(c), reachable: false };
        }
        if lux <= pts[0].1 {
            return Inversion { command: clamp(pts[0].0), reachable: lux >= pts[0].1 };
        }
        let i = pts.partition_point(|p| p.1 < lux);
        let (a, b) = (pts[i - 1], pts[i]);
        let c = a.0 + (b.0 - a.0) * (lux - a.1) / (b.1 - a.1);
        Inversion { command: clamp(c), reachable: true }
    }
}

/// Evenly spaced commands from 0 to 100 inclusive.
pub fn sweep_commands(steps: usize) -> Result<Vec<f64>> {
    if steps < 2 {
        return Err(Error::InvalidArgument(format!("calibration needs >= 2 steps, got {steps}")));
    }
    Ok((0..steps).map(|i| 100.0 * i as f64 / (steps - 1) as f64).collect())
}

pub trait BulbActuator {
    fn set_brightness(&mut self, command: f64) -> Result<()>;
    /// Time from command to visible effect.
    fn latency_s(&self) -> f64;
    /// Let `seconds` pass before the next reading.
    fn wait(&mut self, seconds: f64);
}

pub trait LightSensor {
    fn read_lux(&mut self) -> Result<f64>;
}

/// Extra wait after the bulb latency before each calibration reading.
pub const CALIBRATION_SETTLE_S: f64 = 0.1;
pub const DEFAULT_CALIBRATION_STEPS: usize = 11;

/// Sweep the bulb over `steps` evenly spaced commands, read the sensor at
/// each once the bulb has settled, and fit a monotone curve.
pub fn calibrate(bulb: &mut dyn BulbActuator, sensor: &mut dyn LightSensor, steps: usize) -> Result<CalibrationCurve> {
    let mut samples = Vec::with_capacity(steps);
    for command in sweep_commands(steps)? {
        bulb.set_brightness(command)?;
        bulb.wait(bulb.latency_s() + CALIBRATION_SETTLE_S);
        let lux =
            sensor.read_lux().map_err(|e| Error::Calibration(format!("sensor read at command {command}: {e}")))?;
        samples.push((command, lux));
    }
    CalibrationCurve::from_samples(samples)
}
