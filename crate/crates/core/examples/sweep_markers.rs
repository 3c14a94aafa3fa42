//! A reduced open-loop marker sweep, written as CSV.
//!
//! cargo run --release --example sweep_markers -- [out.csv]

use std::path::PathBuf;

use ambientd::sim::{default_sweep, sweep_marker_grid, write_grid_csv, SweepConfig};

fn main() -> ambientd::Result<()> {
    let out = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "out/marker_grid_small.csv".into()));
    let cfg = SweepConfig {
        distances_cm: vec![20.0, 50.0, 90.0],
        angles_deg: vec![0.0, 30.0, 60.0],
        lux_levels: vec![50.0, 223.6, 1000.0],
        trials: 5,
        ..default_sweep()
    };
    let cells = sweep_marker_grid(&cfg)?;
    for pattern in &cfg.patterns {
        let (best, worst) = cells
            .iter()
            .filter(|c| c.pattern == *pattern)
            .fold((0.0f64, 100.0f64), |(b, w), c| (b.max(c.mean_percentage), w.min(c.mean_percentage)));
        println!("{:<18} best {best:>5.1}%  worst {worst:>5.1}%", pattern.name());
    }
    write_grid_csv(&out, &cells)?;
    println!("{} cells written to {}", cells.len(), out.display());
    Ok(())
}
