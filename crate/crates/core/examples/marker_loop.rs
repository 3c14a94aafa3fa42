//! Dynamic marker escalation: a small marker seen from 90 cm in a dim room.
//! The edge first raises the light, then enlarges and finally swaps the
//! pattern on the E-Ink display until the match target is met.
//!
//! cargo run --example marker_loop -- [scenario.json]

use std::path::PathBuf;

use ambientd::sim::{run_scenario, Scenario, TransportKind};

fn main() -> ambientd::Result<()> {
    let path = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("scenarios/marker.json"));
    let scenario = Scenario::load(&path)?;
    let (report, log) = run_scenario(&scenario, TransportKind::InProcess)?;
    let r = &report.regions[0];
    println!("phases: {:?}", r.phase_sequence);
    println!("final: {:?} with {:?}", r.marker_phase, r.final_marker);
    println!("observations to satisfied: {:?}", r.observations_to_satisfied);
    for e in log.records.iter().filter(|e| e.kind != "reading") {
        println!("  {:>6} ms {:<16} {:<13} {}", e.t_ms, e.node, e.kind, e.detail);
    }
    Ok(())
}
