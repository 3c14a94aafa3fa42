use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::bench::SimulatedBench;
use super::scenario::Scenario;
use super::seeds::derive_seed;
use crate::clock::{EventQueue, SimTime};
use crate::edge::{
    BackgroundServer, CommandPayload, EdgeClient, EdgeConfig, EdgeService, ManualClock, MetricsRecord, PolicyMode,
    QueueSink, ReadingBody, RegionConfig, SensorReading,
};
use crate::error::{Error, Result};
use crate::policy::{calibrate, select_optimal_lux, CalibrationCurve, MarkerPhase, DEFAULT_CALIBRATION_STEPS};
use crate::scene::{
    apply_bulb_command, read_light_sensor, render_region, BulbState, EInkState, EnvironmentState, MarkerSpec,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TransportKind {
    #[default]
    InProcess,
    RealHttp,
}

impl fmt::Display for TransportKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TransportKind::InProcess => "in-process",
            TransportKind::RealHttp => "real-http",
        })
    }
}

impl FromStr for TransportKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "in-process" => Ok(TransportKind::InProcess),
            "real-http" => Ok(TransportKind::RealHttp),
            other => Err(Error::Config(format!("unknown transport {other:?}"))),
        }
    }
}

/// One line of `events.jsonl`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EventRecord {
    pub t_ms: u64,
    pub node: String,
    pub kind: String,
    /// SHA-256 of the event payload's JSON encoding, hex, first 16 bytes.
    pub digest: String,
    pub detail: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct EventLog {
    pub records: Vec<EventRecord>,
}

fn digest<T: Serialize>(payload: &T) -> String {
    let bytes = serde_json::to_vec(payload).expect("event payloads serialize");
    let hash = Sha256::digest(&bytes);
    hash[..16].iter().map(|b| format!("{b:02x}")).collect()
}

impl EventLog {
    pub fn push<T: Serialize>(&mut self, t: SimTime, node: &str, kind: &str, payload: &T, detail: String) {
        debug_assert!(self.records.last().is_none_or(|r| r.t_ms <= t.as_millis()));
        self.records.push(EventRecord {
            t_ms: t.as_millis(),
            node: node.to_string(),
            kind: kind.to_string(),
            digest: digest(payload),
            detail,
        });
    }

    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for r in &self.records {
            out.push_str(&serde_json::to_string(r).expect("event records serialize"));
            out.push('\n');
        }
        out
    }

    pub fn of_kind<'a>(&'a self, kind: &'a str) -> impl Iterator<Item = &'a EventRecord> + 'a {
        self.records.iter().filter(move |r| r.kind == kind)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimedBrightness {
    pub t_ms: u64,
    pub command: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimedMarker {
    pub t_ms: u64,
    pub spec: MarkerSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionReport {
    pub id: String,
    pub policy: PolicyMode,
    /// Setpoint implied by the last observed texture.
    pub setpoint_lux: f64,
    /// Last measured lux.
    pub converged_lux: Option<f64>,
    pub converged: bool,
    /// Start of the final run of in-deadband readings, when converged.
    pub converged_at_s: Option<f64>,
    pub bulb_commands: Vec<TimedBrightness>,
    pub eink_commands: Vec<TimedMarker>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub marker_phase: Option<MarkerPhase>,
    /// Phases in the order they were entered.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub phase_sequence: Vec<MarkerPhase>,
    /// Observations up to and including the first satisfied one.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub observations_to_satisfied: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub final_marker: Option<MarkerSpec>,
    pub metrics: Vec<MetricsRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FinalReport {
    pub scenario: String,
    pub seed: u64,
    pub transport: TransportKind,
    pub duration_s: f64,
    pub sensor_period_s: f64,
    pub converged: bool,
    pub total_bulb_commands: usize,
    pub total_eink_commands: usize,
    /// Longest issue-to-effect delay of a bulb command, simulated time.
    pub max_bulb_actuation_ms: u64,
    /// Longest issue-to-effect delay of an E-Ink change, simulated time.
    pub max_eink_actuation_ms: u64,
    /// Longest wall-clock command acceptance time at the edge.
    pub max_dispatch_latency_ms: f64,
    pub regions: Vec<RegionReport>,
}

impl FinalReport {
    pub fn region(&self, id: &str) -> Option<&RegionReport> {
        self.regions.iter().find(|r| r.id == id)
    }

    /// Copy with wall-clock measurements and the transport label cleared,
    /// for comparing runs across transports.
    pub fn without_wall_clock(&self) -> FinalReport {
        FinalReport { transport: TransportKind::InProcess, max_dispatch_latency_ms: 0.0, ..self.clone() }
    }
}

enum Event {
    SensorTick { region: usize, k: u64 },
    BulbApply { region: usize, command: f64, issued: SimTime },
    EInkDue { region: usize, issued: SimTime },
    Pose { region: usize, distance_cm: f64, viewing_angle_deg: f64 },
}

enum Transport {
    InProcess(Arc<EdgeService>),
    Http { client: EdgeClient, _server: BackgroundServer },
}

impl Transport {
    fn put(&self, reading: &SensorReading) -> Result<MetricsRecord> {
        match self {
            Transport::InProcess(svc) => svc.ingest(reading.clone()),
            Transport::Http { client, .. } => client.put_reading(&reading.sensor_id, &reading.body),
        }
    }
}

struct RegionRun {
    bulb: String,
    eink_id: Option<String>,
    eink: Option<EInkState>,
    bulb_commands: Vec<TimedBrightness>,
    eink_commands: Vec<TimedMarker>,
    records: Vec<MetricsRecord>,
    measured: Vec<(u64, f64)>,
}

fn edge_curves(scenario: &Scenario, env: &EnvironmentState, log: &mut EventLog) -> Result<Vec<CalibrationCurve>> {
    scenario
        .regions
        .iter()
        .map(|r| {
            if !scenario.calibrate {
                return CalibrationCurve::from_lux_curve(&scenario.lux_curve, DEFAULT_CALIBRATION_STEPS);
            }
            let seed = derive_seed(scenario.seed, &["calibration", &r.id], 0);
            let bench = SimulatedBench::new(env.clone(), r.id.clone(), scenario.bulb_latency_s, seed)?;
            let curve = calibrate(&mut bench.bulb(), &mut bench.sensor(), scenario.calibration_steps)?;
            log.push(
                SimTime::ZERO,
                &format!("calibration/{}", r.id),
                "calibrated",
                &curve,
                format!("{} points, max {:.1} lux", curve.points.len(), curve.max_lux()),
            );
            Ok(curve)
        })
        .collect()
}

/// Edge configuration for the regions of `scenario`, one curve per region.
pub fn edge_config(scenario: &Scenario, curves: &[CalibrationCurve], data_dir: Option<PathBuf>) -> EdgeConfig {
    let regions = scenario
        .regions
        .iter()
        .zip(curves)
        .map(|(r, curve)| RegionConfig {
            id: r.id.clone(),
            policy: r.policy,
            bulb: Some(r.bulb_id()),
            eink: r.eink_id(),
            curve: Some(curve.clone()),
            marker: r.marker.map(|m| m.spec),
            max_marker_size: r.max_marker_size,
            target_percentage: scenario.policy.target_percentage,
            deadband_fraction: scenario.policy.deadband_fraction,
            settle_s: scenario.policy.settle_s,
            eink_latency_s: scenario.eink_latency_s,
        })
        .collect();
    EdgeConfig {
        data_dir,
        regions,
        scene_change: scenario.policy.scene_change,
        predictor: scenario.policy.predictor.clone(),
    }
}

/// Curves the edge starts with: the bulb model sampled at the default
/// step count.
pub fn nominal_curves(scenario: &Scenario) -> Result<Vec<CalibrationCurve>> {
    scenario
        .regions
        .iter()
        .map(|_| CalibrationCurve::from_lux_curve(&scenario.lux_curve, DEFAULT_CALIBRATION_STEPS))
        .collect()
}

/// Run `scenario` to completion. Events are appended to `log` as they
/// happen, so a failed run leaves the partial log behind.
pub fn run_scenario_into(scenario: &Scenario, transport: TransportKind, log: &mut EventLog) -> Result<FinalReport> {
    scenario.validate()?;
    let mut env =
        EnvironmentState::new(scenario.regions.iter().map(|r| r.to_region()).collect(), scenario.lux_curve.clone())?;
    let curves = edge_curves(scenario, &env, log)?;

    let sink = Arc::new(QueueSink::default());
    let clock = Arc::new(ManualClock::new(0));
    let service = Arc::new(EdgeService::open(edge_config(scenario, &curves, None), sink.clone(), clock.clone())?);
    let transport_kind = transport;
    let transport = match transport {
        TransportKind::InProcess => Transport::InProcess(service.clone()),
        TransportKind::RealHttp => {
            let server = BackgroundServer::start(service.clone(), "127.0.0.1:0")
                .map_err(|e| Error::Transport(format!("starting edge server: {e}")))?;
            Transport::Http { client: EdgeClient::new(server.base_url()), _server: server }
        }
    };

    let mut runs: Vec<RegionRun> = scenario
        .regions
        .iter()
        .map(|r| -> Result<RegionRun> {
            let eink = match r.marker {
                Some(m) => Some(EInkState::new(m.spec).with_latency(scenario.eink_latency_s)?),
                None => None,
            };
            Ok(RegionRun {
                bulb: r.bulb_id(),
                eink_id: r.eink_id(),
                eink,
                bulb_commands: Vec::new(),
                eink_commands: Vec::new(),
                records: Vec::new(),
                measured: Vec::new(),
            })
        })
        .collect::<Result<_>>()?;

    let end = SimTime::from_secs_f64(scenario.duration_s);
    let period = SimTime::from_secs_f64(scenario.sensor_period_s);
    let mut queue: EventQueue<Event> = EventQueue::new();
    for t in &scenario.trajectory {
        let region = scenario.regions.iter().position(|r| r.id == t.region).expect("validated");
        queue.schedule(
            SimTime::from_secs_f64(t.at_s),
            Event::Pose { region, distance_cm: t.distance_cm, viewing_angle_deg: t.viewing_angle_deg },
        );
    }
    for region in 0..scenario.regions.len() {
        queue.schedule(SimTime::ZERO, Event::SensorTick { region, k: 0 });
    }

    let mut max_bulb_ms = 0u64;
    let mut max_eink_ms = 0u64;
    while let Some((now, event)) = queue.pop() {
        if now > end {
            break;
        }
        match event {
            Event::SensorTick { region, k } => {
                let spec = &scenario.regions[region];
                let id = spec.id.as_str();
                let current = env.region(id)?.clone();
                let lux = read_light_sensor(&current, derive_seed(scenario.seed, &["sensor", id], k));
                let image = render_region(
                    &current,
                    derive_seed(scenario.seed, &["camera", id], k),
                    scenario.camera.width,
                    scenario.camera.height,
                )?;
                let reading = SensorReading {
                    sensor_id: format!("cam-{id}"),
                    body: ReadingBody {
                        region_id: id.to_string(),
                        timestamp_ms: now.as_millis(),
                        lux: Some(lux),
                        image_pgm_b64: Some(crate::edge::encode_image(&image)),
                    },
                };
                clock.set(now.as_millis());
                let sensor_node = format!("sensor/{id}");
                log.push(now, &sensor_node, "reading", &reading, format!("lux {lux:.1}"));
                let record = match transport.put(&reading) {
                    Ok(r) => r,
                    Err(e) => {
                        log.push(now, &sensor_node, "transport-error", &e.to_string(), e.to_string());
                        return Err(e);
                    }
                };
                let mut detail =
                    format!("lux {lux:.1} corners {} {:?}", record.metrics.corner_count, record.texture_class);
                if let (Some(m), Some(p)) = (record.marker_match, record.marker_phase) {
                    detail.push_str(&format!(" match {:.1}% {p:?}", m.percentage));
                }
                log.push(now, "edge", "record", &record, detail);
                let run = &mut runs[region];
                run.measured.push((now.as_millis(), lux));
                run.records.push(record);

                for cmd in sink.drain() {
                    let r = runs
                        .iter()
                        .position(|r| {
                            r.bulb == cmd.actuator_id || r.eink_id.as_deref() == Some(cmd.actuator_id.as_str())
                        })
                        .ok_or_else(|| Error::NotFound(format!("actuator {}", cmd.actuator_id)))?;
                    match cmd.payload {
                        CommandPayload::SetBrightness(c) => {
                            log.push(now, "edge", "command", &cmd, format!("{} brightness {c:.2}", cmd.actuator_id));
                            runs[r].bulb_commands.push(TimedBrightness { t_ms: now.as_millis(), command: c });
                            let bulb = BulbState::new(c, scenario.bulb_latency_s)?;
                            queue.schedule(
                                bulb.effective_at(now),
                                Event::BulbApply { region: r, command: c, issued: now },
                            );
                        }
                        CommandPayload::SetMarker(spec) => {
                            log.push(
                                now,
                                "edge",
                                "command",
                                &cmd,
                                format!("{} marker {} size {}", cmd.actuator_id, spec.pattern.name(), spec.size_index),
                            );
                            runs[r].eink_commands.push(TimedMarker { t_ms: now.as_millis(), spec });
                            let eink = runs[r].eink.as_mut().expect("eink actuator has a display");
                            let (next, due) = eink.apply_eink_update(spec, now);
                            *eink = next;
                            match due {
                                Some(due) => queue.schedule(due, Event::EInkDue { region: r, issued: now }),
                                None => log.push(now, &cmd.actuator_id, "eink-unchanged", &spec, String::new()),
                            }
                        }
                    }
                }
                let next = SimTime(period.as_millis() * (k + 1));
                if next <= end {
                    queue.schedule(next, Event::SensorTick { region, k: k + 1 });
                }
            }
            Event::BulbApply { region, command, issued } => {
                let id = &scenario.regions[region].id;
                let bulb = BulbState::new(command, scenario.bulb_latency_s)?;
                env = apply_bulb_command(&bulb, &env, id)?;
                let lux = env.region(id)?.illuminance;
                max_bulb_ms = max_bulb_ms.max(now.saturating_sub(issued).as_millis());
                log.push(now, &runs[region].bulb, "bulb-applied", &(command, lux), format!("lux {lux:.1}"));
            }
            Event::EInkDue { region, issued } => {
                let id = scenario.regions[region].id.clone();
                let run = &mut runs[region];
                let eink = run.eink.as_mut().expect("scheduled by an E-Ink command");
                if let Some(spec) = eink.advance(now) {
                    if let Some(m) = env.region_mut(&id)?.marker.as_mut() {
                        m.spec = spec;
                    }
                    max_eink_ms = max_eink_ms.max(now.saturating_sub(issued).as_millis());
                    let node = run.eink_id.clone().unwrap_or_default();
                    log.push(
                        now,
                        &node,
                        "eink-shown",
                        &spec,
                        format!("{} size {}", spec.pattern.name(), spec.size_index),
                    );
                }
            }
            Event::Pose { region, distance_cm, viewing_angle_deg } => {
                let id = scenario.regions[region].id.clone();
                if let Some(m) = env.region_mut(&id)?.marker.as_mut() {
                    m.distance_cm = distance_cm;
                    m.viewing_angle_deg = viewing_angle_deg;
                }
                log.push(
                    now,
                    &format!("user/{id}"),
                    "pose",
                    &(distance_cm, viewing_angle_deg),
                    format!("{distance_cm} cm {viewing_angle_deg} deg"),
                );
            }
        }
    }

    let dispatch = service.dispatch_stats();
    drop(transport);

    let deadband = scenario.policy.deadband_fraction;
    let mut regions = Vec::new();
    for (spec, run) in scenario.regions.iter().zip(runs) {
        let setpoint = run
            .records
            .iter()
            .rev()
            .find(|r| r.image_fresh)
            .map(|r| select_optimal_lux(r.texture_class))
            .unwrap_or(crate::policy::COARSE_OPTIMAL_LUX);
        let within = |lux: f64| (lux - setpoint).abs() <= deadband * setpoint;
        let tail_start = run.measured.iter().rposition(|&(_, l)| !within(l)).map_or(0, |i| i + 1);
        let tail_len = run.measured.len() - tail_start;
        let phases: Vec<MarkerPhase> = run.records.iter().filter_map(|r| r.marker_phase).collect();
        let mut phase_sequence = phases.clone();
        phase_sequence.dedup();
        let marker_phase = phases.last().copied();
        let converged = match spec.policy {
            PolicyMode::Illuminance => tail_len >= 3,
            PolicyMode::Marker => marker_phase == Some(MarkerPhase::Satisfied),
            PolicyMode::Observe => true,
        };
        let converged_at_s =
            (spec.policy == PolicyMode::Illuminance && converged).then(|| run.measured[tail_start].0 as f64 / 1000.0);
        regions.push(RegionReport {
            id: spec.id.clone(),
            policy: spec.policy,
            setpoint_lux: setpoint,
            converged_lux: run.measured.last().map(|m| m.1),
            converged,
            converged_at_s,
            bulb_commands: run.bulb_commands,
            eink_commands: run.eink_commands,
            marker_phase,
            phase_sequence,
            observations_to_satisfied: phases.iter().position(|p| *p == MarkerPhase::Satisfied).map(|i| i + 1),
            final_marker: run.eink.map(|e| e.displayed),
            metrics: run.records,
        });
    }
    Ok(FinalReport {
        scenario: scenario.name.clone(),
        seed: scenario.seed,
        transport: transport_kind,
        duration_s: scenario.duration_s,
        sensor_period_s: scenario.sensor_period_s,
        converged: regions.iter().all(|r| r.converged),
        total_bulb_commands: regions.iter().map(|r| r.bulb_commands.len()).sum(),
        total_eink_commands: regions.iter().map(|r| r.eink_commands.len()).sum(),
        max_bulb_actuation_ms: max_bulb_ms,
        max_eink_actuation_ms: max_eink_ms,
        max_dispatch_latency_ms: dispatch.max_latency_ms,
        regions,
    })
}

pub fn run_scenario(scenario: &Scenario, transport: TransportKind) -> Result<(FinalReport, EventLog)> {
    let mut log = EventLog::default();
    let report = run_scenario_into(scenario, transport, &mut log)?;
    Ok((report, log))
}

/// One CSV row per metrics record.
pub fn metrics_csv(report: &FinalReport) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "region_id",
        "timestamp_ms",
        "brightness",
        "contrast",
        "edge_strength",
        "corner_count",
        "texture_class",
        "scene_change",
        "marker_match_pct",
        "marker_phase",
    ])
    .map_err(csv_err)?;
    for region in &report.regions {
        for r in &region.metrics {
            w.write_record([
                r.region_id.clone(),
                r.timestamp_ms.to_string(),
                format!("{:.3}", r.metrics.brightness),
                format!("{:.3}", r.metrics.contrast),
                format!("{:.3}", r.metrics.edge_strength),
                r.metrics.corner_count.to_string(),
                r.texture_class.to_string(),
                r.scene_change.to_string(),
                r.marker_match.map(|m| format!("{:.2}", m.percentage)).unwrap_or_default(),
                r.marker_phase.map(|p| format!("{p:?}")).unwrap_or_default(),
            ])
            .map_err(csv_err)?;
        }
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(std::io::Error::other(e.to_string())))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

fn csv_err(e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(e.to_string()))
}

/// Write `events.jsonl`, `metrics.csv` and (when the run finished)
/// `report.json` into `dir`.
pub fn write_outputs(dir: &Path, log: &EventLog, report: Option<&FinalReport>) -> Result<()> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join("events.jsonl"), log.to_jsonl())?;
    if let Some(report) = report {
        fs::write(dir.join("metrics.csv"), metrics_csv(report)?)?;
        fs::write(dir.join("report.json"), serde_json::to_string_pretty(report)?)?;
    }
    Ok(())
}
