//! Optical and video see-through headsets sharing a room want different light.
//! Constraints are folded by priority until the intersection would be empty.
//!
//! cargo run --example resolve_constraints

use ambientd::policy::{resolve_constraints_detailed, ControlConstraint};

fn main() -> ambientd::Result<()> {
    let cases = [
        (
            "tracking app vs comfort",
            vec![
                ControlConstraint::new("tracking", 250.0, 800.0, 750.0, 0)?,
                ControlConstraint::new("comfort", 100.0, 400.0, 300.0, 1)?,
            ],
        ),
        (
            "optical vs video see-through",
            vec![
                ControlConstraint::new("vst-headset", 300.0, 1000.0, 500.0, 0)?,
                ControlConstraint::new("ost-headset", 50.0, 250.0, 150.0, 0)?,
                ControlConstraint::new("reading", 200.0, 600.0, 400.0, 2)?,
            ],
        ),
        (
            "disjoint lower tier",
            vec![
                ControlConstraint::new("tracking", 250.0, 800.0, 750.0, 0)?,
                ControlConstraint::new("night mode", 10.0, 100.0, 50.0, 1)?,
                ControlConstraint::new("plants", 400.0, 2000.0, 900.0, 3)?,
            ],
        ),
    ];
    for (name, constraints) in cases {
        let r = resolve_constraints_detailed(&constraints)?;
        if r.tiers_applied == 0 {
            println!("{name:<30} -> {:>6.1} lux (top tier disagrees, mean of its preferred values)", r.lux);
        } else {
            println!(
                "{name:<30} -> {:>6.1} lux (range [{}, {}], {} tiers applied)",
                r.lux, r.range[0], r.range[1], r.tiers_applied
            );
        }
    }
    Ok(())
}
