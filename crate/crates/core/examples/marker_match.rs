//! Match percentage of each marker pattern as the viewer moves away and the
//! room darkens.
//!
//! cargo run --example marker_match

use ambientd::scene::{render_region, MarkerPattern, MarkerPlacement, MarkerSpec, Region, TextureSpec};
use ambientd::vision::{MarkerMatcher, CANONICAL_HEIGHT, CANONICAL_WIDTH};

fn main() -> ambientd::Result<()> {
    let matcher = MarkerMatcher::new();
    let poses = [(20.0, 0.0), (50.0, 30.0), (90.0, 60.0)];
    for pattern in MarkerPattern::ALL {
        for lux in [60.0, 700.0] {
            let mut row = format!("{:<18} {lux:>4} lux", pattern.name());
            for (distance_cm, viewing_angle_deg) in poses {
                let region =
                    Region::new("display", TextureSpec::Flat { level: 0.85 }, lux).with_marker(MarkerPlacement {
                        spec: MarkerSpec::new(pattern, 1)?,
                        distance_cm,
                        viewing_angle_deg,
                    });
                let mean = (0..5)
                    .map(|seed| -> ambientd::Result<f64> {
                        let img = render_region(&region, seed, CANONICAL_WIDTH, CANONICAL_HEIGHT)?;
                        Ok(matcher.observe(pattern, &img).percentage)
                    })
                    .sum::<ambientd::Result<f64>>()?
                    / 5.0;
                row.push_str(&format!("  {distance_cm:>2} cm/{viewing_angle_deg:>2} deg {mean:>5.1}%"));
            }
            println!("{row}");
        }
    }
    Ok(())
}
