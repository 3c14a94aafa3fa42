use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const LOWEST_PRIORITY: u8 = 3;

/// One stakeholder's acceptable illuminance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ControlConstraint {
    pub source: String,
    /// `[lo, hi]` lux.
    pub range: [f64; 2],
    pub preferred: f64,
    /// 0 is the highest priority.
    pub priority: u8,
}

impl ControlConstraint {
    pub fn new(source: impl Into<String>, lo: f64, hi: f64, preferred: f64, priority: u8) -> Result<Self> {
        let c = Self { source: source.into(), range: [lo, hi], preferred, priority };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        let [lo, hi] = self.range;
        if !(lo <= self.preferred && self.preferred <= hi) {
            return Err(Error::InvalidArgument(format!(
                "constraint {}: need lo <= preferred <= hi, got [{lo}, {hi}] / {}",
                self.source, self.preferred
            )));
        }
        if self.priority > LOWEST_PRIORITY {
            return Err(Error::InvalidArgument(format!(
                "constraint {}: priority {} above {LOWEST_PRIORITY}",
                self.source, self.priority
            )));
        }
        Ok(())
    }
}

/// The resolved setpoint plus the range it was clamped into.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Resolution {
    pub lux: f64,
    pub range: [f64; 2],
    /// Tiers folded into `range`, counted from the top.
    pub tiers_applied: usize,
}

/// Fold tiers into a running intersection, highest priority first, stopping
/// at the first tier that would leave it empty. The top tier's preferred
/// value (the mean, when it has several members) is then clamped into it.
pub fn resolve_constraints_detailed(constraints: &[ControlConstraint]) -> Result<Resolution> {
    if constraints.is_empty() {
        return Err(Error::InvalidArgument("no constraints to resolve".into()));
    }
    for c in constraints {
        c.validate()?;
    }
    let top = constraints.iter().map(|c| c.priority).min().unwrap();
    let mut prefs: Vec<f64> = constraints.iter().filter(|c| c.priority == top).map(|c| c.preferred).collect();
    // Sorted so the sum does not depend on input order.
    prefs.sort_by(f64::total_cmp);
    let preferred = prefs.iter().sum::<f64>() / prefs.len() as f64;

    let mut range = [f64::NEG_INFINITY, f64::INFINITY];
    let mut tiers_applied = 0;
    for tier in 0..=LOWEST_PRIORITY {
        let members = constraints.iter().filter(|c| c.priority == tier);
        let mut next = range;
        let mut any = false;
        for c in members {
            any = true;
            next = [next[0].max(c.range[0]), next[1].min(c.range[1])];
        }
        if !any {
            continue;
        }
        if next[0] > next[1] {
            break;
        }
        range = next;
        tiers_applied += 1;
    }
    let lux = if range[0] == range[1] { range[0] } else { preferred.clamp(range[0], range[1]) };
    Ok(Resolution { lux, range, tiers_applied })
}

pub fn resolve_constraints(constraints: &[ControlConstraint]) -> Result<f64> {
    resolve_constraints_detailed(constraints).map(|r| r.lux)
}
