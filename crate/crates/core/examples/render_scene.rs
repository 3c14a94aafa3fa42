//! Render a textured region at a few light levels and save the frames as PGM.
//!
//! cargo run --example render_scene -- [out-dir]

use std::path::PathBuf;

use ambientd::scene::{noise_sigma, render_region, Region, RenderConfig, TextureSpec};
use ambientd::vision::{CANONICAL_HEIGHT, CANONICAL_WIDTH};

fn main() -> ambientd::Result<()> {
    let out = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "out/frames".into()));
    std::fs::create_dir_all(&out)?;
    let textures = [
        ("checkerboard", TextureSpec::Checkerboard { cell: 16, low: 0.1, high: 0.9 }),
        ("speckle", TextureSpec::Speckle { frequency: 0.25, low: 0.2, high: 0.8, seed: 3 }),
    ];
    for (name, texture) in textures {
        for lux in [50.0, 300.0, 750.0] {
            let region = Region::new(name, texture.clone(), lux);
            let img = render_region(&region, 1, CANONICAL_WIDTH, CANONICAL_HEIGHT)?;
            let path = out.join(format!("{name}-{lux}.pgm"));
            std::fs::write(&path, img.to_pgm())?;
            println!("{:<40} noise sigma {:>5.2}", path.display(), noise_sigma(&RenderConfig::default(), lux));
        }
    }
    Ok(())
}
