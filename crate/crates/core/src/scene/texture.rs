use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Procedural surface reflectance, evaluated per pixel in `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum TextureSpec {
    Flat {
        level: f64,
    },
    Checkerboard {
        cell: usize,
        low: f64,
        high: f64,
    },
    /// Vertical stripes, each `cell` pixels wide.
    Stripes {
        cell: usize,
        low: f64,
        high: f64,
    },
    /// Random-valued grains of side `1/frequency` pixels (the fine,
    /// paper-like texture).
    Speckle {
        frequency: f64,
        low: f64,
        high: f64,
        #[serde(default)]
        seed: u64,
    },
    /// Tiled pseudo-random binary cells, like a wall of printed fiducials.
    MarkerGrid {
        cell: usize,
        low: f64,
        high: f64,
        #[serde(default)]
        seed: u64,
    },
}

impl TextureSpec {
    pub fn kind_name(&self) -> &'static str {
        match self {
            TextureSpec::Flat { .. } => "flat",
            TextureSpec::Checkerboard { .. } => "checkerboard",
            TextureSpec::Stripes { .. } => "stripes",
            TextureSpec::Speckle { .. } => "speckle",
            TextureSpec::MarkerGrid { .. } => "marker-grid",
        }
    }

    pub fn validate(&self) -> Result<()> {
        let check_level = |name: &str, v: f64| {
            if (0.0..=1.0).contains(&v) {
                Ok(())
            } else {
                Err(Error::InvalidArgument(format!("texture {name} intensity {v} outside [0,1]")))
            }
        };
        let check_cell = |cell: usize| {
            if cell >= 1 {
                Ok(())
            } else {
                Err(Error::InvalidArgument("texture cell size must be >= 1 px".into()))
            }
        };
        match *self {
            TextureSpec::Flat { level } => check_level("level", level),
            TextureSpec::Checkerboard { cell, low, high }
            | TextureSpec::Stripes { cell, low, high }
            | TextureSpec::MarkerGrid { cell, low, high, .. } => {
                check_cell(cell)?;
                check_level("low", low)?;
                check_level("high", high)
            }
            TextureSpec::Speckle { frequency, low, high, .. } => {
                if !(frequency > 0.0 && frequency.is_finite()) {
                    return Err(Error::InvalidArgument(format!("speckle frequency must be > 0, got {frequency}")));
                }
                check_level("low", low)?;
                check_level("high", high)
            }
        }
    }

    /// Reflectance at pixel `(x, y)`.
    pub fn value(&self, x: usize, y: usize) -> f64 {
        match *self {
            TextureSpec::Flat { level } => level,
            TextureSpec::Checkerboard { cell, low, high } => {
                if ((x / cell) + (y / cell)) % 2 == 0 {
                    low
                } else {
                    high
                }
            }
            TextureSpec::Stripes { cell, low, high } => {
                if (x / cell) % 2 == 0 {
                    low
                } else {
                    high
                }
            }
            TextureSpec::Speckle { frequency, low, high, seed } => {
                let gx = (x as f64 * frequency) as u64;
                let gy = (y as f64 * frequency) as u64;
                low + (high - low) * hash01(gx, gy, seed)
            }
            TextureSpec::MarkerGrid { cell, low, high, seed } => {
                let gx = (x / cell) as u64;
                let gy = (y / cell) as u64;
                if hash01(gx, gy, seed ^ 0xA5A5) < 0.5 {
                    low
                } else {
                    high
                }
            }
        }
    }
}

/// SplitMix64 finalizer.
pub(crate) fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Deterministic lattice hash mapped to `[0, 1)`.
pub(crate) fn hash01(a: u64, b: u64, seed: u64) -> f64 {
    let h = mix64(mix64(mix64(seed) ^ a) ^ b.rotate_left(32));
    (h >> 11) as f64 / (1u64 << 53) as f64
}
