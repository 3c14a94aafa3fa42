//! Expected hologram drift for each texture across the light bands.
//!
//! cargo run --example predict_tracking

use ambientd::policy::{predict_tracking, TextureLabel};

fn main() -> ambientd::Result<()> {
    for texture in [TextureLabel::Checkerboard, TextureLabel::FinePaperLike] {
        for lux in [60.0, 300.0, 800.0] {
            let p = predict_tracking(texture, lux)?;
            println!(
                "{texture:<16} {lux:>4} lux ({:?}): {:>4.1} cm {:?}{}",
                p.band,
                p.expected_error_cm,
                p.class,
                if p.estimated { " [estimated]" } else { "" }
            );
            for g in &p.guidance {
                println!("    - {g}");
            }
        }
    }
    Ok(())
}
