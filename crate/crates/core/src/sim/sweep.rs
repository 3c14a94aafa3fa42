use std::path::Path;

use serde::{Deserialize, Serialize};

use super::seeds::derive_seed;
use crate::error::{Error, Result};
use crate::scene::{
    noiseless_frame, CameraNoise, MarkerPattern, MarkerPlacement, MarkerSpec, Region, RenderConfig, TextureSpec,
};
use crate::vision::{MarkerMatcher, CANONICAL_HEIGHT, CANONICAL_WIDTH};

/// Open-loop marker experiment: every pattern at every pose and light level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub patterns: Vec<MarkerPattern>,
    pub distances_cm: Vec<f64>,
    pub angles_deg: Vec<f64>,
    pub lux_levels: Vec<f64>,
    pub trials: usize,
    pub seed: u64,
    pub size_index: u8,
    /// Surface around the display.
    pub background: TextureSpec,
}

/// 20-90 cm by 10, 0-60 degrees by 15, nine lux levels spaced
/// geometrically over 50-1000, 20 trials, medium markers.
pub fn default_sweep() -> SweepConfig {
    SweepConfig {
        patterns: MarkerPattern::ALL.to_vec(),
        distances_cm: (0..8).map(|i| 20.0 + 10.0 * i as f64).collect(),
        angles_deg: (0..5).map(|i| 15.0 * i as f64).collect(),
        lux_levels: default_lux_levels(),
        trials: 20,
        seed: 1,
        size_index: 1,
        background: TextureSpec::Flat { level: 0.85 },
    }
}

fn default_lux_levels() -> Vec<f64> {
    (0..9).map(|i| (50.0 * 20f64.powf(i as f64 / 8.0) * 10.0).round() / 10.0).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridCell {
    pub pattern: MarkerPattern,
    pub distance_cm: f64,
    pub viewing_angle_deg: f64,
    pub lux: f64,
    pub trials: usize,
    pub mean_percentage: f64,
    pub std_percentage: f64,
}

impl SweepConfig {
    pub fn validate(&self) -> Result<()> {
        if self.trials < 1 {
            return Err(Error::InvalidArgument("trials must be >= 1".into()));
        }
        for (name, list) in
            [("distances", &self.distances_cm), ("angles", &self.angles_deg), ("lux levels", &self.lux_levels)]
        {
            if list.is_empty() {
                return Err(Error::InvalidArgument(format!("{name} must not be empty")));
            }
        }
        if self.patterns.is_empty() {
            return Err(Error::InvalidArgument("patterns must not be empty".into()));
        }
        self.background.validate()?;
        MarkerSpec::new(self.patterns[0], self.size_index)?;
        Ok(())
    }
}

/// Render, crop and match each condition `trials` times with the
/// controller out of the loop. Trial `k` uses the same camera seed in
/// every cell, so differences between cells are not sampling noise.
pub fn sweep_marker_grid(cfg: &SweepConfig) -> Result<Vec<GridCell>> {
    cfg.validate()?;
    let matcher = MarkerMatcher::new();
    let config = RenderConfig::default();
    let frames: Vec<CameraNoise> = (0..cfg.trials as u64)
        .map(|k| CameraNoise::new(derive_seed(cfg.seed, &["sweep"], k), CANONICAL_WIDTH, CANONICAL_HEIGHT))
        .collect();
    let mut conditions =
        Vec::with_capacity(cfg.patterns.len() * cfg.distances_cm.len() * cfg.angles_deg.len() * cfg.lux_levels.len());
    for &pattern in &cfg.patterns {
        let spec = MarkerSpec::new(pattern, cfg.size_index)?;
        for &distance_cm in &cfg.distances_cm {
            for &viewing_angle_deg in &cfg.angles_deg {
                for &lux in &cfg.lux_levels {
                    let region = Region::new("sweep", cfg.background.clone(), lux).with_marker(MarkerPlacement {
                        spec,
                        distance_cm,
                        viewing_angle_deg,
                    });
                    region.validate()?;
                    conditions.push((pattern, region));
                }
            }
        }
    }

    let run_cell = |(pattern, region): &(MarkerPattern, Region)| -> Result<GridCell> {
        let clean = noiseless_frame(&config, region, CANONICAL_WIDTH, CANONICAL_HEIGHT)?;
        let mut scores = Vec::with_capacity(frames.len());
        for frame in &frames {
            let img = clean.with_noise(frame);
            scores.push(matcher.observe(*pattern, &img).percentage);
        }
        let n = scores.len() as f64;
        let mean = scores.iter().sum::<f64>() / n;
        let var = scores.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / n;
        let placement = region.marker.as_ref().expect("sweep regions carry a marker");
        Ok(GridCell {
            pattern: *pattern,
            distance_cm: placement.distance_cm,
            viewing_angle_deg: placement.viewing_angle_deg,
            lux: region.illuminance,
            trials: cfg.trials,
            mean_percentage: mean,
            std_percentage: var.sqrt(),
        })
    };

    // Cells are independent, so splitting them across threads leaves the
    // output unchanged.
    let workers = std::thread::available_parallelism().map_or(1, |n| n.get()).min(conditions.len()).max(1);
    if workers == 1 {
        return conditions.iter().map(run_cell).collect();
    }
    let chunk = conditions.len().div_ceil(workers);
    let parts: Vec<Result<Vec<GridCell>>> = std::thread::scope(|s| {
        let handles: Vec<_> = conditions
            .chunks(chunk)
            .map(|part| s.spawn(|| part.iter().map(run_cell).collect::<Result<Vec<_>>>()))
            .collect();
        handles.into_iter().map(|h| h.join().expect("sweep worker panicked")).collect()
    });
    let mut cells = Vec::with_capacity(conditions.len());
    for part in parts {
        cells.extend(part?);
    }
    Ok(cells)
}

pub fn grid_csv(cells: &[GridCell]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "pattern",
        "distance_cm",
        "viewing_angle_deg",
        "lux",
        "trials",
        "mean_percentage",
        "std_percentage",
    ])
    .map_err(csv_err)?;
    for c in cells {
        w.write_record([
            c.pattern.name().to_string(),
            c.distance_cm.to_string(),
            c.viewing_angle_deg.to_string(),
            c.lux.to_string(),
            c.trials.to_string(),
            format!("{:.4}", c.mean_percentage),
            format!("{:.4}", c.std_percentage),
        ])
        .map_err(csv_err)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(std::io::Error::other(e.to_string())))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

fn csv_err(e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(e.to_string()))
}

pub fn write_grid_csv(path: &Path, cells: &[GridCell]) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    std::fs::write(path, grid_csv(cells)?)?;
    Ok(())
}
