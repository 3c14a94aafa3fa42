//! Marker patterns shown on the E-Ink display and their reference render.

use serde::{Deserialize, Serialize};

use super::texture::hash01;
use crate::error::{Error, Result};
use crate::image::SyntheticImage;

pub const DARK: f64 = 0.1;
pub const LIGHT: f64 = 0.9;

/// Side of the square reference render every scene crop is matched against.
pub const REFERENCE_SIZE: usize = 200;
/// Light quiet zone around the marker inside the reference render.
pub const REFERENCE_MARGIN: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum MarkerPattern {
    #[serde(rename = "binary-grid-A")]
    BinaryGridA,
    #[serde(rename = "binary-grid-B")]
    BinaryGridB,
    #[serde(rename = "image-uniform")]
    ImageUniform,
    #[serde(rename = "image-nonuniform")]
    ImageNonuniform,
}

impl MarkerPattern {
    /// Escalation order used when the controller switches patterns.
    pub const ALL: [MarkerPattern; 4] = [
        MarkerPattern::BinaryGridA,
        MarkerPattern::BinaryGridB,
        MarkerPattern::ImageUniform,
        MarkerPattern::ImageNonuniform,
    ];

    pub fn name(self) -> &'static str {
        match self {
            MarkerPattern::BinaryGridA => "binary-grid-A",
            MarkerPattern::BinaryGridB => "binary-grid-B",
            MarkerPattern::ImageUniform => "image-uniform",
            MarkerPattern::ImageNonuniform => "image-nonuniform",
        }
    }

    pub fn next(self) -> Option<MarkerPattern> {
        let i = Self::ALL.iter().position(|&p| p == self)?;
        Self::ALL.get(i + 1).copied()
    }

    /// Reflectance at normalized marker coordinates `u, v` in `[0, 1)`.
    pub fn reflectance(self, u: f64, v: f64) -> f64 {
        match self {
            MarkerPattern::BinaryGridA => binary_grid(GRID_A, u, v),
            MarkerPattern::BinaryGridB => binary_grid(GRID_B, u, v),
            MarkerPattern::ImageUniform => image_marker(u, v, false),
            MarkerPattern::ImageNonuniform => image_marker(u, v, true),
        }
    }
}

impl std::str::FromStr for MarkerPattern {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        MarkerPattern::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown marker pattern {s:?}")))
    }
}

// Inner 6x6 payloads, row-major from the most significant of the low 36 bits.
const GRID_A: u64 = 0b101100_011010_110011_001101_100110_011001;
const GRID_B: u64 = 0b110010_001101_101001_010110_110100_001011;

fn binary_grid(bits: u64, u: f64, v: f64) -> f64 {
    // Truncation equals floor here: negatives clamp to 0 either way.
    let cx = ((u * 8.0) as i32).clamp(0, 7);
    let cy = ((v * 8.0) as i32).clamp(0, 7);
    if cx == 0 || cy == 0 || cx == 7 || cy == 7 {
        return DARK;
    }
    let idx = (cy - 1) * 6 + (cx - 1);
    if (bits >> (35 - idx)) & 1 == 1 {
        DARK
    } else {
        LIGHT
    }
}

const IMAGE_LEVELS: [f64; 4] = [0.1, 0.37, 0.63, 0.9];

fn image_marker(u: f64, v: f64, clustered: bool) -> f64 {
    const FRAME: f64 = 1.0 / 16.0;
    if u < FRAME || v < FRAME || u >= 1.0 - FRAME || v >= 1.0 - FRAME {
        return DARK;
    }
    // Interior mapped onto a 14x14 block lattice.
    let iu = (u - FRAME) / (1.0 - 2.0 * FRAME);
    let iv = (v - FRAME) / (1.0 - 2.0 * FRAME);
    if clustered && iu + iv >= 1.0 {
        // Feature-poor half: smooth shading, no corners.
        return 0.9 - 0.25 * iu;
    }
    let bx = (iu * 14.0) as u64;
    let by = (iv * 14.0) as u64;
    let seed = if clustered { 0x17 } else { 0x29 };
    IMAGE_LEVELS[(hash01(bx, by, seed) * 4.0) as usize % 4]
}

/// Which marker is displayed and how large.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct MarkerSpec {
    pub pattern: MarkerPattern,
    /// 0 = small, 1 = medium, 2 = large.
    pub size_index: u8,
}

impl MarkerSpec {
    pub const MAX_SIZE_INDEX: u8 = 2;

    pub fn new(pattern: MarkerPattern, size_index: u8) -> Result<Self> {
        let s = Self { pattern, size_index };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if self.size_index > Self::MAX_SIZE_INDEX {
            return Err(Error::InvalidArgument(format!("marker size_index {} not in 0..=2", self.size_index)));
        }
        Ok(())
    }
}

/// A marker as seen by the AR camera.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MarkerPlacement {
    pub spec: MarkerSpec,
    pub distance_cm: f64,
    pub viewing_angle_deg: f64,
}

impl MarkerPlacement {
    pub fn validate(&self) -> Result<()> {
        self.spec.validate()?;
        if !(self.distance_cm > 0.0) {
            return Err(Error::InvalidArgument(format!("marker distance must be > 0, got {}", self.distance_cm)));
        }
        if !(0.0..90.0).contains(&self.viewing_angle_deg) {
            return Err(Error::InvalidArgument(format!(
                "viewing angle must be in [0, 90), got {}",
                self.viewing_angle_deg
            )));
        }
        Ok(())
    }
}

/// Noise-free reference render of `pattern`: a `REFERENCE_SIZE` square,
/// light margin, marker filling the interior.
pub fn reference_image(pattern: MarkerPattern) -> SyntheticImage {
    let inner = (REFERENCE_SIZE - 2 * REFERENCE_MARGIN) as f64;
    SyntheticImage::from_fn(REFERENCE_SIZE, REFERENCE_SIZE, |x, y| {
        let mut acc = 0.0;
        // 2x2 supersampling to match the scene renderer.
        for (ox, oy) in SUBSAMPLES {
            let u = (x as f64 + ox - REFERENCE_MARGIN as f64) / inner;
            let v = (y as f64 + oy - REFERENCE_MARGIN as f64) / inner;
            acc += if (0.0..1.0).contains(&u) && (0.0..1.0).contains(&v) { pattern.reflectance(u, v) } else { LIGHT };
        }
        (acc / 4.0 * 255.0).round().clamp(0.0, 255.0) as u8
    })
}

pub(crate) const SUBSAMPLES: [(f64, f64); 4] = [(0.25, 0.25), (0.75, 0.25), (0.25, 0.75), (0.75, 0.75)];
