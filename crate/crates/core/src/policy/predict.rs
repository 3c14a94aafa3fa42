use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Error at or below which tracking counts as good.
pub const GOOD_ERROR_CM: f64 = 5.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TextureLabel {
    Checkerboard,
    FinePaperLike,
}

impl TextureLabel {
    pub fn name(self) -> &'static str {
        match self {
            TextureLabel::Checkerboard => "checkerboard",
            TextureLabel::FinePaperLike => "fine-paper-like",
        }
    }
}

impl fmt::Display for TextureLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for TextureLabel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "checkerboard" => Ok(TextureLabel::Checkerboard),
            "fine-paper-like" => Ok(TextureLabel::FinePaperLike),
            other => Err(Error::InvalidArgument(format!(
                "unknown texture label {other:?} (expected checkerboard or fine-paper-like)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LuxBand {
    Low,
    Medium,
    High,
}

/// Bands are 50-100, 150-450 and 500-1000 lux. Values below or above the
/// outer bands extend them; values in a gap go to the nearer band edge,
/// the lower band on an exact tie.
pub fn lux_band(lux: f64) -> LuxBand {
    if lux <= 100.0 {
        LuxBand::Low
    } else if lux < 150.0 {
        if lux - 100.0 <= 150.0 - lux {
            LuxBand::Low
        } else {
            LuxBand::Medium
        }
    } else if lux <= 450.0 {
        LuxBand::Medium
    } else if lux < 500.0 {
        if lux - 450.0 <= 500.0 - lux {
            LuxBand::Medium
        } else {
            LuxBand::High
        }
    } else {
        LuxBand::High
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PredictorCell {
    pub error_cm: f64,
    /// True for values not measured in the original study.
    pub estimated: bool,
}

impl PredictorCell {
    const fn measured(error_cm: f64) -> Self {
        Self { error_cm, estimated: false }
    }

    const fn estimated(error_cm: f64) -> Self {
        Self { error_cm, estimated: true }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BandRow {
    pub low: PredictorCell,
    pub medium: PredictorCell,
    pub high: PredictorCell,
}

impl BandRow {
    pub fn cell(&self, band: LuxBand) -> PredictorCell {
        match band {
            LuxBand::Low => self.low,
            LuxBand::Medium => self.medium,
            LuxBand::High => self.high,
        }
    }
}

/// Expected tracking error per texture and lux band.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PredictorTable {
    pub checkerboard: BandRow,
    pub fine_paper_like: BandRow,
}

impl Default for PredictorTable {
    fn default() -> Self {
        Self {
            checkerboard: BandRow {
                low: PredictorCell::estimated(15.0),
                medium: PredictorCell::measured(4.1),
                high: PredictorCell::estimated(3.0),
            },
            fine_paper_like: BandRow {
                low: PredictorCell::estimated(25.0),
                medium: PredictorCell::measured(12.0),
                high: PredictorCell::estimated(5.0),
            },
        }
    }
}

impl PredictorTable {
    pub fn row(&self, texture: TextureLabel) -> &BandRow {
        match texture {
            TextureLabel::Checkerboard => &self.checkerboard,
            TextureLabel::FinePaperLike => &self.fine_paper_like,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TrackingClass {
    Good,
    Poor,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrackingPrediction {
    pub texture: TextureLabel,
    pub lux: f64,
    pub band: LuxBand,
    pub expected_error_cm: f64,
    pub class: TrackingClass,
    pub estimated: bool,
    pub guidance: Vec<String>,
}

pub const GUIDANCE_MORE_LIGHT: &str = "Hologram drift likely: increase light level";
pub const GUIDANCE_ADD_TEXTURE: &str = "Add visual texture near placement point";
pub const GUIDANCE_MOVE: &str = "Place content on a more strongly textured surface";

pub fn predict_tracking(texture: TextureLabel, lux: f64) -> Result<TrackingPrediction> {
    predict_tracking_with(&PredictorTable::default(), texture, lux)
}

pub fn predict_tracking_with(table: &PredictorTable, texture: TextureLabel, lux: f64) -> Result<TrackingPrediction> {
    if !(lux >= 0.0) || !lux.is_finite() {
        return Err(Error::InvalidArgument(format!("lux must be finite and >= 0, got {lux}")));
    }
    let band = lux_band(lux);
    let row = table.row(texture);
    let cell = row.cell(band);
    let class = if cell.error_cm <= GOOD_ERROR_CM { TrackingClass::Good } else { TrackingClass::Poor };
    let mut guidance = Vec::new();
    if class == TrackingClass::Poor {
        let brighter_helps =
            [LuxBand::Medium, LuxBand::High].into_iter().any(|b| b > band && row.cell(b).error_cm < cell.error_cm);
        if brighter_helps {
            guidance.push(GUIDANCE_MORE_LIGHT.to_string());
        }
        let coarser = table.checkerboard.cell(band).error_cm;
        if texture == TextureLabel::FinePaperLike && coarser < cell.error_cm {
            guidance.push(GUIDANCE_ADD_TEXTURE.to_string());
        }
        if guidance.is_empty() {
            guidance.push(GUIDANCE_MOVE.to_string());
        }
    }
    Ok(TrackingPrediction {
        texture,
        lux,
        band,
        expected_error_cm: cell.error_cm,
        class,
        estimated: cell.estimated,
        guidance,
    })
}
