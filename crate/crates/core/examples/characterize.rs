//! Brightness, contrast, edge strength and corner count for a few surfaces,
//! and the texture class the illuminance policy would pick from them.
//!
//! cargo run --example characterize

use ambientd::policy::select_optimal_lux;
use ambientd::scene::{render_region, Region, TextureSpec};
use ambientd::vision::{classify_texture, compute_metrics, CANONICAL_HEIGHT, CANONICAL_WIDTH};

fn main() -> ambientd::Result<()> {
    let surfaces = [
        ("plain wall", TextureSpec::Flat { level: 0.7 }),
        ("stripes", TextureSpec::Stripes { cell: 12, low: 0.2, high: 0.8 }),
        ("checkerboard", TextureSpec::Checkerboard { cell: 16, low: 0.1, high: 0.9 }),
        ("paper grain", TextureSpec::Speckle { frequency: 0.25, low: 0.2, high: 0.8, seed: 3 }),
    ];
    println!(
        "{:<14} {:>6} {:>10} {:>8} {:>10} {:>8} {:>7}",
        "surface", "lux", "brightness", "contrast", "edge", "corners", "target"
    );
    for (name, texture) in surfaces {
        for lux in [80.0, 300.0, 750.0] {
            let img = render_region(&Region::new(name, texture.clone(), lux), 7, CANONICAL_WIDTH, CANONICAL_HEIGHT)?;
            let m = compute_metrics(&img, Some(lux))?;
            let class = classify_texture(&m);
            println!(
                "{name:<14} {lux:>6} {:>10.1} {:>8.1} {:>10.1} {:>8} {:>7}",
                m.brightness,
                m.contrast,
                m.edge_strength,
                m.corner_count,
                select_optimal_lux(class)
            );
        }
    }
    Ok(())
}
