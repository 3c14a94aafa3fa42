use serde::{Deserialize, Serialize};

use super::marker::MarkerSpec;
use super::EnvironmentState;
use crate::clock::SimTime;
use crate::error::{Error, Result};

/// Monotone map from bulb brightness command (percent) to region lux.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum LuxCurve {
    /// `lux = offset + slope * command`.
    Affine { offset: f64, slope: f64 },
    /// Piecewise-linear through `[command, lux]` knots, flat beyond the ends.
    Table { points: Vec<[f64; 2]> },
}

impl Default for LuxCurve {
    fn default() -> Self {
        LuxCurve::Affine { offset: 10.0, slope: 9.9 }
    }
}

impl LuxCurve {
    pub fn validate(&self) -> Result<()> {
        match self {
            LuxCurve::Affine { offset, slope } => {
                if *offset < 0.0 || *slope < 0.0 || !offset.is_finite() || !slope.is_finite() {
                    return Err(Error::InvalidArgument(format!(
                        "affine lux curve needs offset, slope >= 0 (got {offset}, {slope})"
                    )));
                }
            }
            LuxCurve::Table { points } => {
                if points.len() < 2 {
                    return Err(Error::InvalidArgument("lux table needs >= 2 points".into()));
                }
                for w in points.windows(2) {
                    if w[1][0] <= w[0][0] {
                        return Err(Error::InvalidArgument("lux table commands must be strictly increasing".into()));
                    }
                    if w[1][1] < w[0][1] {
                        return Err(Error::InvalidArgument("lux table must be non-decreasing".into()));
                    }
                }
                if points.iter().any(|p| p[1] < 0.0) {
                    return Err(Error::InvalidArgument("lux table values must be >= 0".into()));
                }
            }
        }
        Ok(())
    }

    /// Lux produced by `command` (clamped to `[0, 100]`).
    pub fn lux(&self, command: f64) -> f64 {
        let c = command.clamp(0.0, 100.0);
        match self {
            LuxCurve::Affine { offset, slope } => offset + slope * c,
            LuxCurve::Table { points } => {
                let first = points[0];
                let last = points[points.len() - 1];
                if c <= first[0] {
                    return first[1];
                }
                if c >= last[0] {
                    return last[1];
                }
                let i = points.partition_point(|p| p[0] <= c);
                let (a, b) = (points[i - 1], points[i]);
                a[1] + (b[1] - a[1]) * (c - a[0]) / (b[0] - a[0])
            }
        }
    }
}

/// Smart bulb: the last brightness command and how long it takes to land.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BulbState {
    /// Percent, 0..=100.
    pub brightness_command: f64,
    pub actuation_latency_s: f64,
}

impl BulbState {
    pub fn new(brightness_command: f64, actuation_latency_s: f64) -> Result<Self> {
        if !(0.0..=100.0).contains(&brightness_command) {
            return Err(Error::InvalidArgument(format!("brightness command {brightness_command} outside [0, 100]")));
        }
        Ok(Self { brightness_command, actuation_latency_s })
    }

    /// Simulation time at which a command issued at `now` takes effect.
    pub fn effective_at(&self, now: SimTime) -> SimTime {
        now + SimTime::from_secs_f64(self.actuation_latency_s)
    }
}

/// Land a bulb command: the region's illuminance becomes
/// `lux_curve(brightness_command)`. The caller schedules this for
/// [`BulbState::effective_at`].
pub fn apply_bulb_command(state: &BulbState, env: &EnvironmentState, region_id: &str) -> Result<EnvironmentState> {
    let mut next = env.clone();
    let lux = next.lux_curve.lux(state.brightness_command);
    next.region_mut(region_id)?.illuminance = lux;
    Ok(next)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PendingMarker {
    pub spec: MarkerSpec,
    pub due: SimTime,
}

/// E-Ink display: what is shown and the in-flight refresh, if any.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EInkState {
    pub displayed: MarkerSpec,
    pub update_latency_s: f64,
    pub pending: Option<PendingMarker>,
}

impl EInkState {
    pub const DEFAULT_LATENCY_S: f64 = 1.0;

    pub fn new(displayed: MarkerSpec) -> Self {
        Self { displayed, update_latency_s: Self::DEFAULT_LATENCY_S, pending: None }
    }

    pub fn with_latency(mut self, update_latency_s: f64) -> Result<Self> {
        if !(update_latency_s > 0.0) {
            return Err(Error::InvalidArgument(format!("E-Ink update latency must be > 0, got {update_latency_s}")));
        }
        self.update_latency_s = update_latency_s;
        Ok(self)
    }

    /// Request `spec` at `now`. A later request supersedes an in-flight one;
    /// requesting what is already shown (with nothing in flight) is a no-op.
    /// Returns the new state and the time a visible change is due, if any.
    pub fn apply_eink_update(&self, spec: MarkerSpec, now: SimTime) -> (EInkState, Option<SimTime>) {
        let mut next = self.clone();
        if spec == self.displayed {
            next.pending = None;
            return (next, None);
        }
        if let Some(p) = self.pending {
            if p.spec == spec {
                return (next, Some(p.due));
            }
        }
        let due = now + SimTime::from_secs_f64(self.update_latency_s);
        next.pending = Some(PendingMarker { spec, due });
        (next, Some(due))
    }

    /// Complete the in-flight refresh if it is due. Returns the newly
    /// displayed spec when the panel visibly changed.
    pub fn advance(&mut self, now: SimTime) -> Option<MarkerSpec> {
        match self.pending {
            Some(p) if p.due <= now => {
                self.pending = None;
                self.displayed = p.spec;
                Some(p.spec)
            }
            _ => None,
        }
    }

    /// The spec that is or will be shown once in-flight updates land.
    pub fn target(&self) -> MarkerSpec {
        self.pending.map(|p| p.spec).unwrap_or(self.displayed)
    }
}
