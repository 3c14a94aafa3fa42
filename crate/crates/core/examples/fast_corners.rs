//! FAST-9 corners on a rendered marker grid, before and after suppression.
//!
//! cargo run --example fast_corners -- [threshold]

use ambientd::scene::{render_region, Region, TextureSpec};
use ambientd::vision::{detect_fast_candidates, detect_fast_corners};

fn main() -> ambientd::Result<()> {
    let t: u8 = std::env::args().nth(1).map_or(20, |s| s.parse().expect("threshold 0-255"));
    let texture = TextureSpec::MarkerGrid { cell: 10, low: 0.1, high: 0.9, seed: 5 };
    for lux in [40.0, 150.0, 600.0] {
        let img = render_region(&Region::new("grid", texture.clone(), lux), 2, 320, 240)?;
        let candidates = detect_fast_candidates(&img, t);
        let mut corners = detect_fast_corners(&img, t);
        corners.sort_by(|a, b| b.score.cmp(&a.score));
        let strongest: Vec<String> =
            corners.iter().take(3).map(|c| format!("({}, {}) {}", c.x, c.y, c.score)).collect();
        println!(
            "{lux:>5} lux: {:>5} candidates, {:>4} after suppression, strongest {}",
            candidates.len(),
            corners.len(),
            strongest.join(", ")
        );
    }
    Ok(())
}
