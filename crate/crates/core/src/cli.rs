//! Command-line front end. JSON goes to stdout, diagnostics to stderr.

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use crate::edge::{
    serve, EdgeConfig, EdgeService, RegionConfig, StderrSink, SystemClock, DEFAULT_BIND_ADDR, ENV_BIND_ADDR,
    ENV_DATA_DIR,
};
use crate::error::{Error, Result};
use crate::image::SyntheticImage;
use crate::policy::{calibrate, predict_tracking, TextureLabel, DEFAULT_CALIBRATION_STEPS};
use crate::scene::{EnvironmentState, MarkerPattern, TextureSpec};
use crate::sim::{
    default_sweep, edge_config, nominal_curves, run_scenario_into, sweep_marker_grid, write_grid_csv, write_outputs,
    EventLog, Scenario, SimulatedBench, SweepConfig, TransportKind,
};
use crate::vision::{classify_texture, compute_metrics, CANONICAL_HEIGHT, CANONICAL_WIDTH};

pub const EXIT_OK: u8 = 0;
pub const EXIT_FAILURE: u8 = 1;
pub const EXIT_CONFIG: u8 = 2;
pub const EXIT_NOT_CONVERGED: u8 = 3;

#[derive(Debug, Parser)]
#[command(name = "ambientd", version, about = "Ambient environment optimization for AR: simulate, serve, characterize")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run a scenario in the simulator and write events, metrics and a report.
    Run(RunArgs),
    /// Start the edge service.
    Serve(ServeArgs),
    /// Characterize a binary PGM image.
    Characterize(CharacterizeArgs),
    /// Measure a region's bulb-to-lux curve on the simulated bench.
    Calibrate(CalibrateArgs),
    /// Predict hologram tracking quality for a texture and light level.
    Predict(PredictArgs),
    /// Open-loop marker matching sweep over distance, angle and light.
    SweepMarkers(SweepArgs),
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// Scenario JSON file.
    pub scenario: PathBuf,
    #[arg(long, default_value = "in-process")]
    pub transport: TransportKind,
    /// Override the scenario seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    /// Exit 3 unless every region converged.
    #[arg(long)]
    pub require_convergence: bool,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[arg(long, env = ENV_BIND_ADDR, default_value = DEFAULT_BIND_ADDR)]
    pub bind: String,
    /// Directory for per-region logs; in-memory when unset.
    #[arg(long, env = ENV_DATA_DIR)]
    pub data_dir: Option<PathBuf>,
    /// Take regions, actuators and policies from a scenario file.
    #[arg(long)]
    pub scenario: Option<PathBuf>,
    /// Observe-only region to accept readings for (repeatable).
    #[arg(long = "region")]
    pub regions: Vec<String>,
}

#[derive(Debug, Args)]
pub struct CharacterizeArgs {
    pub image: PathBuf,
    /// Paired illuminance reading to include in the metrics.
    #[arg(long)]
    pub lux: Option<f64>,
}

#[derive(Debug, Args)]
pub struct CalibrateArgs {
    pub scenario: PathBuf,
    #[arg(long)]
    pub region: Option<String>,
    #[arg(long, default_value_t = DEFAULT_CALIBRATION_STEPS)]
    pub steps: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    /// checkerboard or fine-paper-like
    #[arg(long)]
    pub texture: String,
    #[arg(long)]
    pub lux: f64,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    /// Output directory for marker_grid.csv.
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    #[arg(long, default_value_t = 20)]
    pub trials: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Comma-separated distances in cm.
    #[arg(long, value_delimiter = ',')]
    pub distances: Option<Vec<f64>>,
    /// Comma-separated viewing angles in degrees.
    #[arg(long, value_delimiter = ',')]
    pub angles: Option<Vec<f64>>,
    /// Comma-separated illuminance levels in lux.
    #[arg(long, value_delimiter = ',')]
    pub lux: Option<Vec<f64>>,
    /// Comma-separated pattern names.
    #[arg(long, value_delimiter = ',', value_parser = parse_pattern)]
    pub patterns: Option<Vec<MarkerPattern>>,
    /// 0 small, 1 medium, 2 large.
    #[arg(long, default_value_t = 1)]
    pub size: u8,
}

fn parse_pattern(s: &str) -> std::result::Result<MarkerPattern, String> {
    MarkerPattern::ALL.into_iter().find(|p| p.name() == s).ok_or_else(|| format!("unknown pattern {s:?}"))
}

fn exit_code_of(e: &Error) -> u8 {
    match e {
        Error::Config(_) | Error::InvalidArgument(_) | Error::Pgm(_) | Error::Json(_) => EXIT_CONFIG,
        _ => EXIT_FAILURE,
    }
}

fn print_json(v: &impl serde::Serialize) -> Result<()> {
    println!("{}", serde_json::to_string(v)?);
    Ok(())
}

/// Run a parsed command line and return the process exit code.
pub fn run(cli: Cli) -> ExitCode {
    let result = match cli.command {
        Command::Run(a) => cmd_run(&a),
        Command::Serve(a) => cmd_serve(&a),
        Command::Characterize(a) => cmd_characterize(&a).map(|_| EXIT_OK),
        Command::Calibrate(a) => cmd_calibrate(&a).map(|_| EXIT_OK),
        Command::Predict(a) => cmd_predict(&a).map(|_| EXIT_OK),
        Command::SweepMarkers(a) => cmd_sweep(&a).map(|_| EXIT_OK),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("ambientd: {e}");
            ExitCode::from(exit_code_of(&e))
        }
    }
}

fn load_scenario(path: &Path) -> Result<Scenario> {
    Scenario::load(path).map_err(|e| match e {
        Error::Io(io) => Error::Config(format!("{}: {io}", path.display())),
        other => other,
    })
}

pub fn cmd_run(a: &RunArgs) -> Result<u8> {
    let mut scenario = load_scenario(&a.scenario)?;
    if let Some(seed) = a.seed {
        scenario.seed = seed;
    }
    let started = Instant::now();
    let mut log = EventLog::default();
    let report = match run_scenario_into(&scenario, a.transport, &mut log) {
        Ok(r) => r,
        Err(e) => {
            write_outputs(&a.out, &log, None)?;
            return Err(e);
        }
    };
    write_outputs(&a.out, &log, Some(&report))?;
    let regions: Vec<_> = report
        .regions
        .iter()
        .map(|r| {
            json!({
                "id": r.id,
                "converged": r.converged,
                "converged_lux": r.converged_lux,
                "setpoint_lux": r.setpoint_lux,
                "bulb_commands": r.bulb_commands.len(),
                "eink_commands": r.eink_commands.len(),
                "marker_phase": r.marker_phase,
            })
        })
        .collect();
    print_json(&json!({
        "scenario": report.scenario,
        "seed": report.seed,
        "transport": report.transport,
        "converged": report.converged,
        "wall_s": started.elapsed().as_secs_f64(),
        "out": a.out,
        "regions": regions,
    }))?;
    if a.require_convergence && !report.converged {
        eprintln!("ambientd: scenario {} did not converge", report.scenario);
        return Ok(EXIT_NOT_CONVERGED);
    }
    Ok(EXIT_OK)
}

pub fn cmd_serve(a: &ServeArgs) -> Result<u8> {
    let mut config = match &a.scenario {
        Some(path) => {
            let scenario = load_scenario(path)?;
            edge_config(&scenario, &nominal_curves(&scenario)?, None)
        }
        None => EdgeConfig::default(),
    };
    config.data_dir = a.data_dir.clone();
    for id in &a.regions {
        if !config.regions.iter().any(|r| &r.id == id) {
            config.regions.push(RegionConfig::new(id.clone()));
        }
    }
    let service = Arc::new(EdgeService::open(config, Arc::new(StderrSink), Arc::new(SystemClock))?);
    let rt = tokio::runtime::Builder::new_multi_thread().enable_all().build().map_err(Error::Io)?;
    rt.block_on(async move {
        let listener = match tokio::net::TcpListener::bind(&a.bind).await {
            Ok(l) => l,
            Err(e) => {
                eprintln!("ambientd: cannot bind {}: {e}", a.bind);
                return Ok(EXIT_FAILURE);
            }
        };
        let addr = listener.local_addr().map_err(Error::Io)?;
        eprintln!("ambientd: listening on http://{addr}");
        serve(listener, service, async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
        .map_err(Error::Io)?;
        Ok(EXIT_OK)
    })
}

pub fn cmd_characterize(a: &CharacterizeArgs) -> Result<()> {
    let bytes = std::fs::read(&a.image).map_err(|e| Error::InvalidArgument(format!("{}: {e}", a.image.display())))?;
    let img = SyntheticImage::from_pgm(&bytes)?;
    let img = if (img.width, img.height) == (CANONICAL_WIDTH, CANONICAL_HEIGHT) {
        img
    } else {
        img.resize_nearest(CANONICAL_WIDTH, CANONICAL_HEIGHT)
    };
    let metrics = compute_metrics(&img, a.lux)?;
    let class = classify_texture(&metrics);
    let mut v = serde_json::to_value(metrics)?;
    v["texture_class"] = serde_json::to_value(class)?;
    print_json(&v)
}

pub fn cmd_calibrate(a: &CalibrateArgs) -> Result<()> {
    let scenario = load_scenario(&a.scenario)?;
    let spec = match &a.region {
        Some(id) => scenario
            .regions
            .iter()
            .find(|r| &r.id == id)
            .ok_or_else(|| Error::InvalidArgument(format!("no region {id:?} in scenario")))?,
        None => scenario.regions.first().ok_or_else(|| Error::Config("scenario has no regions".into()))?,
    };
    let env =
        EnvironmentState::new(scenario.regions.iter().map(|r| r.to_region()).collect(), scenario.lux_curve.clone())?;
    let bench = SimulatedBench::new(env, spec.id.clone(), scenario.bulb_latency_s, a.seed)?;
    let curve = calibrate(&mut bench.bulb(), &mut bench.sensor(), a.steps)?;
    print_json(&json!({
        "region_id": spec.id,
        "steps": a.steps,
        "elapsed_sim_s": bench.now().as_secs_f64(),
        "points": curve.points,
    }))
}

pub fn cmd_predict(a: &PredictArgs) -> Result<()> {
    let texture: TextureLabel =
        a.texture.parse().map_err(|_| Error::InvalidArgument(format!("unknown texture {:?}", a.texture)))?;
    print_json(&predict_tracking(texture, a.lux)?)
}

pub fn cmd_sweep(a: &SweepArgs) -> Result<()> {
    let base = default_sweep();
    let cfg = SweepConfig {
        patterns: a.patterns.clone().unwrap_or(base.patterns),
        distances_cm: a.distances.clone().unwrap_or(base.distances_cm),
        angles_deg: a.angles.clone().unwrap_or(base.angles_deg),
        lux_levels: a.lux.clone().unwrap_or(base.lux_levels),
        trials: a.trials,
        seed: a.seed,
        size_index: a.size,
        background: TextureSpec::Flat { level: 0.85 },
    };
    let started = Instant::now();
    let cells = sweep_marker_grid(&cfg)?;
    let path = a.out.join("marker_grid.csv");
    write_grid_csv(&path, &cells)?;
    print_json(&json!({
        "cells": cells.len(),
        "trials": cfg.trials,
        "path": path,
        "wall_s": started.elapsed().as_secs_f64(),
    }))
}
