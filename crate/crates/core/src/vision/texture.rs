use serde::{Deserialize, Serialize};

use super::metrics::ImageMetrics;

/// Corner count above which a surface counts as finely textured.
pub const FINE_CORNER_THRESHOLD: u32 = 250;

/// Canonical characterization resolution the threshold is calibrated at.
pub const CANONICAL_WIDTH: usize = 320;
pub const CANONICAL_HEIGHT: usize = 240;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TextureClass {
    Coarse,
    Fine,
}

impl std::fmt::Display for TextureClass {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            TextureClass::Coarse => "coarse",
            TextureClass::Fine => "fine",
        })
    }
}

/// Fine iff strictly more than 250 corners at 320x240.
pub fn classify_texture(metrics: &ImageMetrics) -> TextureClass {
    if metrics.corner_count > FINE_CORNER_THRESHOLD {
        TextureClass::Fine
    } else {
        TextureClass::Coarse
    }
}
