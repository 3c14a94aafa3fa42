use serde::{Deserialize, Serialize};

use super::metrics::ImageMetrics;

/// Thresholds for flagging a scene change between consecutive frames of a
/// stationary camera.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SceneChangeThresholds {
    /// Absolute brightness jump.
    pub brightness: f64,
    /// Edge-strength change relative to `max(previous, 1)`.
    pub edge_strength_ratio: f64,
    /// Absolute corner-count jump.
    pub corner_count: u32,
}

impl Default for SceneChangeThresholds {
    fn default() -> Self {
        Self { brightness: 15.0, edge_strength_ratio: 0.5, corner_count: 100 }
    }
}

pub fn detect_scene_change(previous: &ImageMetrics, current: &ImageMetrics) -> bool {
    detect_scene_change_with(&SceneChangeThresholds::default(), previous, current)
}

pub fn detect_scene_change_with(th: &SceneChangeThresholds, previous: &ImageMetrics, current: &ImageMetrics) -> bool {
    let d_brightness = (current.brightness - previous.brightness).abs();
    let d_edges = (current.edge_strength - previous.edge_strength).abs() / previous.edge_strength.max(1.0);
    let d_corners = current.corner_count.abs_diff(previous.corner_count);
    d_brightness > th.brightness || d_edges > th.edge_strength_ratio || d_corners > th.corner_count
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(brightness: f64, edge_strength: f64, corner_count: u32) -> ImageMetrics {
        ImageMetrics { brightness, contrast: 0.0, edge_strength, corner_count, illuminance: None }
    }

    #[test]
    fn identical_metrics_do_not_change() {
        assert!(!detect_scene_change(&m(100.0, 500.0, 30), &m(100.0, 500.0, 30)));
    }

    #[test]
    fn each_threshold_triggers_alone() {
        let base = m(100.0, 500.0, 30);
        assert!(detect_scene_change(&base, &m(140.0, 500.0, 30)));
        assert!(!detect_scene_change(&base, &m(115.0, 500.0, 30)));
        assert!(detect_scene_change(&base, &m(100.0, 751.0, 30)));
        assert!(!detect_scene_change(&base, &m(100.0, 750.0, 30)));
        assert!(detect_scene_change(&base, &m(100.0, 500.0, 131)));
        assert!(!detect_scene_change(&base, &m(100.0, 500.0, 130)));
    }

    #[test]
    fn edge_ratio_uses_floor_of_one() {
        assert!(detect_scene_change(&m(0.0, 0.0, 0), &m(0.0, 0.6, 0)));
        assert!(!detect_scene_change(&m(0.0, 0.0, 0), &m(0.0, 0.5, 0)));
    }
}
