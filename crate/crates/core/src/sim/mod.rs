//! Discrete-event simulation of a deployment: synthetic sensors, bulbs
//! and E-Ink displays driving a real edge service.

mod bench;
mod runner;
mod scenario;
mod seeds;
mod sweep;

pub use bench::{BenchBulb, BenchSensor, SimulatedBench};
pub use runner::{
    edge_config, metrics_csv, nominal_curves, run_scenario, run_scenario_into, write_outputs, EventLog, EventRecord,
    FinalReport, RegionReport, TimedBrightness, TimedMarker, TransportKind,
};
pub use scenario::{CameraSpec, PolicyParams, RegionSpec, Scenario, TrajectoryEvent};
pub use seeds::derive_seed;
pub use sweep::{default_sweep, grid_csv, sweep_marker_grid, write_grid_csv, GridCell, SweepConfig};
