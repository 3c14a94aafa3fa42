use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::marker::{MarkerPlacement, SUBSAMPLES};
use super::{Region, TextureSpec};
use crate::error::{Error, Result};
use crate::image::{round_half_away, to_pixel, SyntheticImage};

/// Relative half-width of the light sensor's uniform error.
pub const SENSOR_RELATIVE_NOISE: f64 = 0.02;

/// Camera and marker-display parameters of the renderer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RenderConfig {
    /// Noise scale at the saturation illuminance; 0 disables noise.
    pub sigma0: f64,
    /// Illuminance at which the camera response saturates.
    pub saturation_lux: f64,
    /// Viewing distance at which a marker has its nominal side length.
    pub marker_reference_distance_cm: f64,
    /// Nominal marker side length in pixels per size index.
    pub marker_side_px: [f64; 3],
}

impl Default for RenderConfig {
    fn default() -> Self {
        Self {
            sigma0: 4.0,
            saturation_lux: 500.0,
            marker_reference_distance_cm: 30.0,
            marker_side_px: [64.0, 104.0, 144.0],
        }
    }
}

impl RenderConfig {
    pub fn noiseless() -> Self {
        Self { sigma0: 0.0, ..Self::default() }
    }
}

/// Camera light response `L(lux) = min(lux / saturation, 1)`.
pub fn light_response(cfg: &RenderConfig, lux: f64) -> f64 {
    (lux / cfg.saturation_lux).clamp(0.0, 1.0)
}

/// Per-pixel noise standard deviation `sigma0 * sqrt(saturation / max(lux, 10))`.
pub fn noise_sigma(cfg: &RenderConfig, lux: f64) -> f64 {
    cfg.sigma0 * (cfg.saturation_lux / lux.max(10.0)).sqrt()
}

/// Marker rectangle in image coordinates (continuous, pixel edges at integers).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Footprint {
    pub x0: f64,
    pub y0: f64,
    pub width: f64,
    pub height: f64,
}

impl Footprint {
    fn contains(&self, x: f64, y: f64) -> bool {
        x >= self.x0 && x < self.x0 + self.width && y >= self.y0 && y < self.y0 + self.height
    }

    fn overlaps_column(&self, x: usize) -> bool {
        let px = x as f64;
        px + 1.0 > self.x0 && px < self.x0 + self.width
    }

    fn overlaps_row(&self, y: usize) -> bool {
        let py = y as f64;
        py + 1.0 > self.y0 && py < self.y0 + self.height
    }
}

/// Where a marker lands in a `width x height` frame: centered, scaled by
/// `reference_distance / distance` and foreshortened horizontally by
/// `cos(angle)`.
pub fn marker_footprint(cfg: &RenderConfig, placement: &MarkerPlacement, width: usize, height: usize) -> Footprint {
    let side = cfg.marker_side_px[placement.spec.size_index as usize] * cfg.marker_reference_distance_cm
        / placement.distance_cm;
    let w = side * placement.viewing_angle_deg.to_radians().cos();
    let h = side;
    Footprint { x0: width as f64 / 2.0 - w / 2.0, y0: height as f64 / 2.0 - h / 2.0, width: w, height: h }
}

/// Render a region with the default camera.
pub fn render_region(region: &Region, camera_seed: u64, width: usize, height: usize) -> Result<SyntheticImage> {
    render_region_with(&RenderConfig::default(), region, camera_seed, width, height)
}

/// Render `region` as seen by the synthetic camera:
/// `clamp(round(T * 255 * L(lux)) + n, 0, 255)` with `n ~ Normal(0, sigma(lux))`
/// drawn row-major from a generator seeded with `camera_seed`.
pub fn render_region_with(
    cfg: &RenderConfig,
    region: &Region,
    camera_seed: u64,
    width: usize,
    height: usize,
) -> Result<SyntheticImage> {
    let mut rng = ChaCha8Rng::seed_from_u64(camera_seed);
    render_core(cfg, region, camera_seed, width, height, || StandardNormal.sample(&mut rng))
}

/// Standard-normal draws of one camera frame, in the order
/// [`render_region_with`] consumes them. Rendering several scenes against
/// the same frame gives the same images as rendering each with the seed,
/// without redrawing the noise.
#[derive(Debug, Clone, PartialEq)]
pub struct CameraNoise {
    pub seed: u64,
    pub width: usize,
    pub height: usize,
    z: Vec<f64>,
}

impl CameraNoise {
    pub fn new(seed: u64, width: usize, height: usize) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let z = (0..width * height).map(|_| StandardNormal.sample(&mut rng)).collect();
        Self { seed, width, height, z }
    }
}

pub fn render_region_with_noise(cfg: &RenderConfig, region: &Region, noise: &CameraNoise) -> Result<SyntheticImage> {
    Ok(noiseless_frame(cfg, region, noise.width, noise.height)?.with_noise(noise))
}

/// A region rendered without sensor noise. Many noisy frames of the same
/// scene can be drawn from one of these.
#[derive(Debug, Clone)]
pub struct NoiselessFrame {
    pub width: usize,
    pub height: usize,
    /// Noise standard deviation at the region's illuminance.
    pub sigma: f64,
    base: Vec<f64>,
}

impl NoiselessFrame {
    fn finish(&self, camera_seed: u64, mut standard_normal: impl FnMut() -> f64) -> SyntheticImage {
        let sigma = self.sigma;
        let pixels = self
            .base
            .iter()
            .map(|&base| {
                let value = if sigma > 0.0 { round_half_away(base + (0.0 + sigma * standard_normal())) } else { base };
                value.clamp(0.0, 255.0) as u8
            })
            .collect();
        SyntheticImage { width: self.width, height: self.height, pixels, seed: camera_seed }
    }

    /// Add a precomputed noise field. Panics if the sizes differ.
    pub fn with_noise(&self, noise: &CameraNoise) -> SyntheticImage {
        assert_eq!((noise.width, noise.height), (self.width, self.height), "noise field size");
        if self.sigma <= 0.0 {
            return self.finish(noise.seed, || 0.0);
        }
        let sigma = self.sigma;
        let pixels = self.base.iter().zip(&noise.z).map(|(&base, &z)| to_pixel(base + (0.0 + sigma * z))).collect();
        SyntheticImage { width: self.width, height: self.height, pixels, seed: noise.seed }
    }
}

fn render_core(
    cfg: &RenderConfig,
    region: &Region,
    camera_seed: u64,
    width: usize,
    height: usize,
    standard_normal: impl FnMut() -> f64,
) -> Result<SyntheticImage> {
    Ok(noiseless_frame(cfg, region, width, height)?.finish(camera_seed, standard_normal))
}

pub fn noiseless_frame(cfg: &RenderConfig, region: &Region, width: usize, height: usize) -> Result<NoiselessFrame> {
    if width < 32 || height < 32 {
        return Err(Error::InvalidArgument(format!("render size {width}x{height} below 32x32")));
    }
    region.validate()?;

    let gain = 255.0 * light_response(cfg, region.illuminance);
    let footprint = region.marker.as_ref().map(|m| (m, marker_footprint(cfg, m, width, height)));

    // Integer pixel span touched by the marker, so the per-pixel test is
    // two range checks.
    let span = footprint.as_ref().map(|(_, fp)| {
        let cols = (0..width).filter(|&x| fp.overlaps_column(x));
        let (x_lo, x_hi) = cols.fold((usize::MAX, 0), |(lo, hi), x| (lo.min(x), hi.max(x + 1)));
        let rows = (0..height).filter(|&y| fp.overlaps_row(y));
        let (y_lo, y_hi) = rows.fold((usize::MAX, 0), |(lo, hi), y| (lo.min(y), hi.max(y + 1)));
        (x_lo..x_hi, y_lo..y_hi)
    });

    let flat_base = match region.texture {
        TextureSpec::Flat { level } => Some(round_half_away(level * gain)),
        _ => None,
    };
    let mut base = vec![0.0f64; width * height];
    for (y, row) in base.chunks_exact_mut(width).enumerate() {
        let marker_row = match (&footprint, &span) {
            (Some((m, fp)), Some((xs, ys))) if ys.contains(&y) => Some((*m, fp, xs)),
            _ => None,
        };
        for (x, out) in row.iter_mut().enumerate() {
            let in_marker = marker_row.is_some_and(|(_, _, xs)| xs.contains(&x));
            *out = match (flat_base, marker_row) {
                (Some(b), _) if !in_marker => b,
                (_, Some((m, fp, _))) if in_marker => {
                    let background = region.texture.value(x, y);
                    let mut acc = 0.0;
                    for (ox, oy) in SUBSAMPLES {
                        let sx = x as f64 + ox;
                        let sy = y as f64 + oy;
                        acc += if fp.contains(sx, sy) {
                            let u = (sx - fp.x0) / fp.width;
                            let v = (sy - fp.y0) / fp.height;
                            m.spec.pattern.reflectance(u, v)
                        } else {
                            background
                        };
                    }
                    round_half_away(acc / 4.0 * gain)
                }
                _ => round_half_away(region.texture.value(x, y) * gain),
            };
        }
    }

    Ok(NoiselessFrame {
        width,
        height,
        // Normal(0, sigma) is sigma times a standard draw.
        sigma: noise_sigma(cfg, region.illuminance),
        base,
    })
}

/// Ambient light sensor: `illuminance * (1 + e)`, `e ~ Uniform(-0.02, 0.02)`.
pub fn read_light_sensor(region: &Region, seed: u64) -> f64 {
    read_light_sensor_with(region, seed, SENSOR_RELATIVE_NOISE)
}

pub fn read_light_sensor_with(region: &Region, seed: u64, relative_noise: f64) -> f64 {
    if relative_noise <= 0.0 {
        return region.illuminance;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x4C55_5853_454E_534F);
    let e: f64 = rng.random_range(-relative_noise..=relative_noise);
    region.illuminance * (1.0 + e)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shared_noise_frame_renders_identically() {
        let spec = crate::scene::MarkerSpec::new(crate::scene::MarkerPattern::ImageUniform, 1).unwrap();
        let noise = CameraNoise::new(77, 96, 64);
        for (texture, lux) in [
            (TextureSpec::Flat { level: 0.85 }, 60.0),
            (TextureSpec::Checkerboard { cell: 8, low: 0.1, high: 0.9 }, 300.0),
            (TextureSpec::Speckle { frequency: 0.25, low: 0.2, high: 0.8, seed: 3 }, 1000.0),
        ] {
            let region = Region::new("r", texture, lux).with_marker(MarkerPlacement {
                spec,
                distance_cm: 60.0,
                viewing_angle_deg: 30.0,
            });
            let direct = render_region(&region, 77, 96, 64).unwrap();
            let shared = render_region_with_noise(&RenderConfig::default(), &region, &noise).unwrap();
            assert_eq!(direct, shared);
        }
    }

    #[test]
    fn noise_is_a_normal_draw_per_pixel() {
        use rand_distr::Normal;
        let region = Region::new("r", TextureSpec::Flat { level: 0.5 }, 100.0);
        let img = render_region(&region, 5, 40, 40).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let normal = Normal::new(0.0, noise_sigma(&RenderConfig::default(), 100.0)).unwrap();
        let base = (0.5f64 * 255.0 * 0.2).round();
        for &p in &img.pixels {
            let expect = (base + normal.sample(&mut rng)).round().clamp(0.0, 255.0) as u8;
            assert_eq!(p, expect);
        }
    }
    use crate::scene::{MarkerPattern, MarkerSpec, TextureSpec};

    fn flat(level: f64, lux: f64) -> Region {
        Region::new("r", TextureSpec::Flat { level }, lux)
    }

    fn mean(img: &SyntheticImage) -> f64 {
        img.pixels.iter().map(|&p| p as f64).sum::<f64>() / img.pixels.len() as f64
    }

    fn std_dev(img: &SyntheticImage) -> f64 {
        let m = mean(img);
        (img.pixels.iter().map(|&p| (p as f64 - m).powi(2)).sum::<f64>() / img.pixels.len() as f64).sqrt()
    }

    #[test]
    fn flat_half_gray_without_noise_is_128() {
        let img = render_region_with(&RenderConfig::noiseless(), &flat(0.5, 500.0), 1, 64, 64).unwrap();
        assert!(img.pixels.iter().all(|&p| p == 128));
    }

    #[test]
    fn dark_room_is_noise_only() {
        let cfg = RenderConfig::noiseless();
        let img = render_region_with(&cfg, &flat(0.5, 0.0), 1, 64, 64).unwrap();
        assert!(img.pixels.iter().all(|&p| p == 0));

        // With noise the clamped zero-mean Gaussian leaves a half-normal mean
        // of sigma(0) / sqrt(2 pi).
        let cfg = RenderConfig::default();
        let img = render_region_with(&cfg, &flat(0.5, 0.0), 1, 64, 64).unwrap();
        let expected = noise_sigma(&cfg, 0.0) / (2.0 * std::f64::consts::PI).sqrt();
        assert!((mean(&img) - expected).abs() < 1.0, "mean {}", mean(&img));
    }

    #[test]
    fn too_small_is_rejected() {
        assert!(matches!(render_region(&flat(0.5, 300.0), 1, 31, 64), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn rendering_is_deterministic_per_seed() {
        let r = flat(0.5, 120.0);
        let a = render_region(&r, 42, 64, 48).unwrap();
        let b = render_region(&r, 42, 64, 48).unwrap();
        let c = render_region(&r, 43, 64, 48).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.pixels, c.pixels);
    }

    #[test]
    fn response_saturates_at_500_lux() {
        let cfg = RenderConfig::noiseless();
        let a = render_region_with(&cfg, &flat(1.0, 500.0), 1, 32, 32).unwrap();
        let b = render_region_with(&cfg, &flat(1.0, 1000.0), 1, 32, 32).unwrap();
        assert_eq!(mean(&a), mean(&b));
    }

    #[test]
    fn noise_decreases_with_light() {
        let cfg = RenderConfig::default();
        let levels = [50.0, 150.0, 300.0, 750.0];
        let stds: Vec<f64> = levels
            .iter()
            .map(|&lux| {
                (0..100)
                    .map(|seed| std_dev(&render_region_with(&cfg, &flat(0.5, lux), seed, 32, 32).unwrap()))
                    .sum::<f64>()
                    / 100.0
            })
            .collect();
        for w in stds.windows(2) {
            assert!(w[0] > w[1], "{stds:?}");
        }
    }

    #[test]
    fn sensor_noise_is_bounded_and_deterministic() {
        let r = flat(0.5, 300.0);
        assert_eq!(read_light_sensor_with(&r, 9, 0.0), 300.0);
        for seed in 0..500 {
            let v = read_light_sensor(&r, seed);
            assert!((294.0..=306.0).contains(&v), "{v}");
            assert_eq!(v, read_light_sensor(&r, seed));
        }
    }

    fn dark_bbox_width(img: &SyntheticImage, threshold: u8) -> usize {
        let mut min_x = usize::MAX;
        let mut max_x = 0;
        for y in 0..img.height {
            for x in 0..img.width {
                if img.get(x, y) < threshold {
                    min_x = min_x.min(x);
                    max_x = max_x.max(x);
                }
            }
        }
        max_x + 1 - min_x
    }

    #[test]
    fn marker_is_foreshortened_by_cosine() {
        let cfg = RenderConfig::noiseless();
        let spec = MarkerSpec::new(MarkerPattern::BinaryGridA, 2).unwrap();
        let render_at = |angle: f64| {
            let region =
                flat(0.9, 500.0).with_marker(MarkerPlacement { spec, distance_cm: 30.0, viewing_angle_deg: angle });
            render_region_with(&cfg, &region, 0, 320, 240).unwrap()
        };
        let w0 = dark_bbox_width(&render_at(0.0), 128) as f64;
        let w60 = dark_bbox_width(&render_at(60.0), 128) as f64;
        assert!((w60 - 0.5 * w0).abs() <= 1.0, "w0 {w0} w60 {w60}");
    }

    #[test]
    fn marker_scales_inversely_with_distance() {
        let cfg = RenderConfig::default();
        let spec = MarkerSpec::new(MarkerPattern::BinaryGridA, 1).unwrap();
        let at = |d: f64| {
            marker_footprint(&cfg, &MarkerPlacement { spec, distance_cm: d, viewing_angle_deg: 0.0 }, 320, 240)
        };
        assert_eq!(at(30.0).width, cfg.marker_side_px[1]);
        assert!((at(60.0).width - cfg.marker_side_px[1] / 2.0).abs() < 1e-9);
    }
}
