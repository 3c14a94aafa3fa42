use serde::{Deserialize, Serialize};

use super::fast::{detect_fast_corners, DEFAULT_THRESHOLD};
use crate::error::{Error, Result};
use crate::image::SyntheticImage;

/// Environment characterization tuple for one frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ImageMetrics {
    /// Mean intensity, 0..=255.
    pub brightness: f64,
    /// Population standard deviation of intensity.
    pub contrast: f64,
    /// Population variance of the 3x3 Laplacian response.
    pub edge_strength: f64,
    pub corner_count: u32,
    /// Lux from the paired light sensor reading, when there is one.
    pub illuminance: Option<f64>,
}

/// Center-8 Laplacian over the valid interior, row-major.
pub fn laplacian_response(img: &SyntheticImage) -> Vec<i32> {
    let (w, h) = (img.width, img.height);
    let mut out = Vec::with_capacity(w.saturating_sub(2) * h.saturating_sub(2));
    for y in 1..h.saturating_sub(1) {
        for x in 1..w.saturating_sub(1) {
            let mut neighbours = 0i32;
            for dy in 0..3 {
                for dx in 0..3 {
                    if dx != 1 || dy != 1 {
                        neighbours += img.get(x + dx - 1, y + dy - 1) as i32;
                    }
                }
            }
            out.push(8 * img.get(x, y) as i32 - neighbours);
        }
    }
    out
}

fn mean_and_variance(values: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    // Two-pass for accuracy.
    let (sum, n) = values.clone().fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    if n == 0 {
        return (0.0, 0.0);
    }
    let mean = sum / n as f64;
    let var = values.map(|v| (v - mean) * (v - mean)).sum::<f64>() / n as f64;
    (mean, var)
}

/// Brightness, contrast, edge strength and FAST corner count of `image`.
pub fn compute_metrics(image: &SyntheticImage, lux: Option<f64>) -> Result<ImageMetrics> {
    if image.width < 32 || image.height < 32 {
        return Err(Error::InvalidArgument(format!("image {}x{} below 32x32", image.width, image.height)));
    }
    let (brightness, var) = mean_and_variance(image.pixels.iter().map(|&p| p as f64));
    let lap = laplacian_response(image);
    let (_, edge_strength) = mean_and_variance(lap.iter().map(|&v| v as f64));
    let corner_count = detect_fast_corners(image, DEFAULT_THRESHOLD).len() as u32;
    Ok(ImageMetrics { brightness, contrast: var.sqrt(), edge_strength, corner_count, illuminance: lux })
}
