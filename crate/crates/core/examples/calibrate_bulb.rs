//! Calibrate a bulb that saturates at 600 lux and invert the fitted curve.
//!
//! cargo run --example calibrate_bulb

use ambientd::policy::calibrate;
use ambientd::scene::{EnvironmentState, LuxCurve, Region, TextureSpec};
use ambientd::sim::SimulatedBench;

fn main() -> ambientd::Result<()> {
    let curve = LuxCurve::Table { points: vec![[0.0, 10.0], [60.0, 600.0], [100.0, 600.0]] };
    let env = EnvironmentState::new(vec![Region::new("desk", TextureSpec::Flat { level: 0.5 }, 10.0)], curve)?;
    let bench = SimulatedBench::new(env, "desk", 0.4, 42)?;
    let fitted = calibrate(&mut bench.bulb(), &mut bench.sensor(), 11)?;
    println!("calibrated in {} of simulated time", bench.now());
    for (command, lux) in &fitted.points {
        println!("  {command:>5.1}% -> {lux:>6.1} lux");
    }
    for target in [100.0, 300.0, 750.0] {
        let inv = fitted.invert(target);
        let note = if inv.reachable { "" } else { " (unreachable, brightest useful setting)" };
        println!("{target:>5} lux needs {:.1}%{note}", inv.command);
    }
    Ok(())
}
