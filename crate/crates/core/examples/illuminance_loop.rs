//! Closed illuminance loop: a coarse and a fine surface start in a dim room
//! and the edge drives each bulb to the level its texture needs.
//!
//! cargo run --example illuminance_loop

use ambientd::edge::PolicyMode;
use ambientd::scene::TextureSpec;
use ambientd::sim::{run_scenario, RegionSpec, Scenario, TransportKind};

fn main() -> ambientd::Result<()> {
    let region = |id: &str, texture| RegionSpec {
        id: id.into(),
        texture,
        initial_lux: 80.0,
        policy: PolicyMode::Illuminance,
        marker: None,
        max_marker_size: 2,
    };
    let mut scenario = Scenario::from_json(
        r#"{"name": "two-desks", "duration_s": 60, "regions": [{"id": "x", "texture": {"kind": "flat", "level": 0.5}, "initial_lux": 1}]}"#,
    )?;
    scenario.regions = vec![
        region("desk", TextureSpec::Checkerboard { cell: 16, low: 0.1, high: 0.9 }),
        region("shelf", TextureSpec::Speckle { frequency: 0.25, low: 0.2, high: 0.8, seed: 3 }),
    ];
    scenario.validate()?;
    let (report, log) = run_scenario(&scenario, TransportKind::InProcess)?;
    for r in &report.regions {
        println!(
            "{:<6} setpoint {:>3} lux, ended at {:>6.1} lux, converged at {:?} s, {} bulb commands",
            r.id,
            r.setpoint_lux,
            r.converged_lux.unwrap_or(0.0),
            r.converged_at_s,
            r.bulb_commands.len()
        );
    }
    println!("{} events", log.records.len());
    for e in log.records.iter().filter(|e| e.kind != "reading").take(12) {
        println!("  {:>6} ms {:<12} {:<13} {}", e.t_ms, e.node, e.kind, e.detail);
    }
    Ok(())
}
