//! Image-based environment characterization: global metrics, FAST corners,
//! texture classification, scene-change flags, and the marker matching
//! pipeline (ROI crop, binary descriptors, mutual nearest neighbours).

mod change;
mod descriptor;
mod fast;
mod matching;
mod metrics;
mod roi;
mod texture;

use std::collections::BTreeMap;

pub use change::{detect_scene_change, detect_scene_change_with, SceneChangeThresholds};
pub use descriptor::{extract_descriptors, sampling_pattern, Descriptor, PointPair, PATTERN_SEED, SMOOTHING};
pub use fast::{detect_fast_candidates, detect_fast_corners, Corner, ARC_LENGTH, CIRCLE, DEFAULT_THRESHOLD};
pub use matching::{match_against_reference, match_guided, MatchReport, MAX_HAMMING};
pub use metrics::{compute_metrics, laplacian_response, ImageMetrics};
pub use roi::{
    crop_to_marker_roi, iterative_threshold, locate_marker, marker_view, rectify, refine_outline, BoundingBox,
    MarkerOutline, CROP_PAD, MIN_COMPONENT_AREA,
};
pub use texture::{classify_texture, TextureClass, CANONICAL_HEIGHT, CANONICAL_WIDTH, FINE_CORNER_THRESHOLD};

use crate::image::SyntheticImage;
use crate::scene::{reference_image, MarkerPattern};

/// Anchor search radius, in reference-frame pixels, used when matching a
/// rectified scene view.
pub const GUIDED_RADIUS: f64 = 8.0;

/// Corners then descriptors, with the default threshold.
pub fn describe(img: &SyntheticImage) -> Vec<Descriptor> {
    let corners = detect_fast_corners(img, DEFAULT_THRESHOLD);
    extract_descriptors(img, &corners)
}

/// Reference descriptor sets for every marker pattern, computed once from
/// the noise-free reference renders.
#[derive(Debug, Clone)]
pub struct MarkerMatcher {
    references: BTreeMap<MarkerPattern, Vec<Descriptor>>,
}

impl Default for MarkerMatcher {
    fn default() -> Self {
        Self::new()
    }
}

impl MarkerMatcher {
    pub fn new() -> Self {
        let references = MarkerPattern::ALL.into_iter().map(|p| (p, describe(&reference_image(p)))).collect();
        Self { references }
    }

    pub fn reference(&self, pattern: MarkerPattern) -> &[Descriptor] {
        &self.references[&pattern]
    }

    /// Crop the scene to the marker, rectify it into the reference frame and
    /// report the share of reference features recovered. A scene with no
    /// detectable marker scores zero.
    pub fn observe(&self, pattern: MarkerPattern, scene: &SyntheticImage) -> MatchReport {
        let reference = self.reference(pattern);
        let scene_desc = match marker_view(scene) {
            Some(view) => describe(&view),
            None => Vec::new(),
        };
        match_guided(&scene_desc, reference, GUIDED_RADIUS).unwrap_or_else(|_| MatchReport::new(0, reference.len()))
    }
}
