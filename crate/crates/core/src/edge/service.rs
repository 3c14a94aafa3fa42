use std::collections::{BTreeMap, HashMap};
use std::fs::{self, File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex, OnceLock, RwLock};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use base64::Engine;
use serde::{Deserialize, Serialize};

use super::wire::{
    Acknowledgment, ActuatorCommand, CommandBody, CommandPayload, MetricsRecord, SensorReading, Stat, TrendSummary,
};
use crate::clock::SimTime;
use crate::error::{Error, Result};
use crate::image::SyntheticImage;
use crate::policy::{
    illuminance_control_step, marker_control_step, predict_tracking_with, CalibrationCurve, IlluminancePolicyState,
    MarkerAction, MarkerControllerState, PredictorTable, TextureLabel, TrackingPrediction, DEFAULT_CALIBRATION_STEPS,
    DEFAULT_DEADBAND_FRACTION, DEFAULT_SETTLE_S, DEFAULT_TARGET_PERCENTAGE,
};
use crate::scene::{LuxCurve, MarkerSpec};
use crate::vision::{
    classify_texture, compute_metrics, detect_scene_change_with, ImageMetrics, MarkerMatcher, SceneChangeThresholds,
    TextureClass, CANONICAL_HEIGHT, CANONICAL_WIDTH,
};

/// Source of "now" for trend windows.
pub trait Clock: Send + Sync {
    fn now_ms(&self) -> u64;
}

#[derive(Debug, Default, Clone, Copy)]
pub struct SystemClock;

impl Clock for SystemClock {
    fn now_ms(&self) -> u64 {
        SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_millis() as u64).unwrap_or(0)
    }
}

/// Clock set explicitly, used under simulation.
#[derive(Debug, Default)]
pub struct ManualClock(AtomicU64);

impl ManualClock {
    pub fn new(ms: u64) -> Self {
        Self(AtomicU64::new(ms))
    }

    pub fn set(&self, ms: u64) {
        self.0.store(ms, Ordering::SeqCst);
    }
}

impl Clock for ManualClock {
    fn now_ms(&self) -> u64 {
        self.0.load(Ordering::SeqCst)
    }
}

/// Where accepted actuator commands go.
pub trait ActuatorSink: Send + Sync {
    fn accept(&self, command: &ActuatorCommand) -> Result<()>;
}

/// Buffers commands until the owner drains them.
#[derive(Debug, Default)]
pub struct QueueSink(Mutex<Vec<ActuatorCommand>>);

impl QueueSink {
    pub fn drain(&self) -> Vec<ActuatorCommand> {
        std::mem::take(&mut *self.0.lock().unwrap())
    }
}

impl ActuatorSink for QueueSink {
    fn accept(&self, command: &ActuatorCommand) -> Result<()> {
        self.0.lock().unwrap().push(command.clone());
        Ok(())
    }
}

/// Writes each command as a JSON line on stderr.
#[derive(Debug, Default, Clone, Copy)]
pub struct StderrSink;

impl ActuatorSink for StderrSink {
    fn accept(&self, command: &ActuatorCommand) -> Result<()> {
        eprintln!("{}", serde_json::to_string(command)?);
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PolicyMode {
    /// Hold the lux setpoint for markerless tracking.
    #[default]
    Illuminance,
    /// Run the dynamic marker escalation.
    Marker,
    /// Characterize and store only.
    Observe,
}

fn default_max_size() -> u8 {
    MarkerSpec::MAX_SIZE_INDEX
}

fn default_target() -> f64 {
    DEFAULT_TARGET_PERCENTAGE
}

fn default_deadband() -> f64 {
    DEFAULT_DEADBAND_FRACTION
}

fn default_settle() -> f64 {
    DEFAULT_SETTLE_S
}

fn default_eink_latency() -> f64 {
    crate::scene::EInkState::DEFAULT_LATENCY_S
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionConfig {
    pub id: String,
    #[serde(default)]
    pub policy: PolicyMode,
    #[serde(default)]
    pub bulb: Option<String>,
    #[serde(default)]
    pub eink: Option<String>,
    /// Command-to-lux curve used to turn setpoints into bulb commands.
    /// Defaults to the standard bulb curve.
    #[serde(default)]
    pub curve: Option<CalibrationCurve>,
    /// Marker initially on the display.
    #[serde(default)]
    pub marker: Option<MarkerSpec>,
    #[serde(default = "default_max_size")]
    pub max_marker_size: u8,
    #[serde(default = "default_target")]
    pub target_percentage: f64,
    #[serde(default = "default_deadband")]
    pub deadband_fraction: f64,
    #[serde(default = "default_settle")]
    pub settle_s: f64,
    #[serde(default = "default_eink_latency")]
    pub eink_latency_s: f64,
}

impl RegionConfig {
    pub fn new(id: impl Into<String>) -> Self {
        Self {
            id: id.into(),
            policy: PolicyMode::Observe,
            bulb: None,
            eink: None,
            curve: None,
            marker: None,
            max_marker_size: default_max_size(),
            target_percentage: default_target(),
            deadband_fraction: default_deadband(),
            settle_s: default_settle(),
            eink_latency_s: default_eink_latency(),
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct EdgeConfig {
    /// Log directory; `None` keeps everything in memory.
    pub data_dir: Option<PathBuf>,
    pub regions: Vec<RegionConfig>,
    pub scene_change: SceneChangeThresholds,
    pub predictor: PredictorTable,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ActuatorKind {
    Bulb,
    EInk,
}

enum RegionPolicy {
    Illuminance(IlluminancePolicyState),
    Marker(MarkerControllerState),
    Observe,
}

struct RegionState {
    config: RegionConfig,
    curve: CalibrationCurve,
    policy: RegionPolicy,
    log: Option<File>,
    history: Vec<MetricsRecord>,
    last_image: Option<(ImageMetrics, TextureClass)>,
}

struct RegionSlot {
    state: Mutex<RegionState>,
    latest: RwLock<Option<Arc<MetricsRecord>>>,
}

/// Ingests readings, characterizes them, runs the region policies and
/// dispatches the resulting commands.
pub struct EdgeService {
    regions: BTreeMap<String, RegionSlot>,
    actuators: BTreeMap<String, (ActuatorKind, String)>,
    sensors: Mutex<HashMap<String, u64>>,
    sink: Arc<dyn ActuatorSink>,
    clock: Arc<dyn Clock>,
    matcher: OnceLock<MarkerMatcher>,
    thresholds: SceneChangeThresholds,
    predictor: PredictorTable,
    dispatch: Mutex<DispatchStats>,
}

/// Running totals over every command this service has dispatched.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct DispatchStats {
    pub count: u64,
    pub max_latency_ms: f64,
}

fn log_path(dir: &Path, region: &str) -> PathBuf {
    dir.join("regions").join(format!("{region}.jsonl"))
}

fn valid_id(id: &str) -> bool {
    !id.is_empty() && id.chars().all(|c| c.is_ascii_alphanumeric() || "-_.".contains(c)) && id != "." && id != ".."
}

fn replay(path: &Path) -> Result<Vec<MetricsRecord>> {
    let reader = BufReader::new(File::open(path)?);
    let lines: Vec<String> = reader.lines().collect::<std::io::Result<_>>()?;
    let mut out = Vec::with_capacity(lines.len());
    let last = lines.len().saturating_sub(1);
    for (i, line) in lines.iter().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        match serde_json::from_str::<MetricsRecord>(line) {
            Ok(r) => out.push(r),
            // A torn final line from an interrupted write is dropped.
            Err(_) if i == last => break,
            Err(e) => {
                return Err(Error::Config(format!("{}: line {}: {e}", path.display(), i + 1)));
            }
        }
    }
    Ok(out)
}

fn decode_image(b64: &str) -> Result<SyntheticImage> {
    let bytes = base64::engine::general_purpose::STANDARD
        .decode(b64.trim())
        .map_err(|e| Error::BadRequest(format!("image_pgm_b64: {e}")))?;
    SyntheticImage::from_pgm(&bytes).map_err(|e| Error::BadRequest(format!("image_pgm_b64: {e}")))
}

/// Base64 PGM encoding used on the wire.
pub fn encode_image(img: &SyntheticImage) -> String {
    base64::engine::general_purpose::STANDARD.encode(img.to_pgm())
}

impl EdgeService {
    pub fn open(config: EdgeConfig, sink: Arc<dyn ActuatorSink>, clock: Arc<dyn Clock>) -> Result<Self> {
        let mut region_configs: BTreeMap<String, RegionConfig> = BTreeMap::new();
        for rc in config.regions {
            if !valid_id(&rc.id) {
                return Err(Error::Config(format!("invalid region id {:?}", rc.id)));
            }
            if region_configs.insert(rc.id.clone(), rc).is_some() {
                return Err(Error::Config("duplicate region id".into()));
            }
        }
        if let Some(dir) = &config.data_dir {
            fs::create_dir_all(dir.join("regions"))?;
            // Logs of regions that are not configured are still served.
            for entry in fs::read_dir(dir.join("regions"))? {
                let path = entry?.path();
                if path.extension().is_some_and(|e| e == "jsonl") {
                    if let Some(id) = path.file_stem().and_then(|s| s.to_str()) {
                        if valid_id(id) {
                            region_configs.entry(id.to_string()).or_insert_with(|| RegionConfig::new(id));
                        }
                    }
                }
            }
        }

        let mut regions = BTreeMap::new();
        let mut actuators = BTreeMap::new();
        let mut sensors = HashMap::new();
        for (id, rc) in region_configs {
            for (act, kind) in [(&rc.bulb, ActuatorKind::Bulb), (&rc.eink, ActuatorKind::EInk)] {
                if let Some(a) = act {
                    if actuators.insert(a.clone(), (kind, id.clone())).is_some() {
                        return Err(Error::Config(format!("actuator {a} registered twice")));
                    }
                }
            }
            let curve = match &rc.curve {
                Some(c) => {
                    c.validate()?;
                    c.clone()
                }
                None => CalibrationCurve::from_lux_curve(&LuxCurve::default(), DEFAULT_CALIBRATION_STEPS)?,
            };
            let policy = match rc.policy {
                PolicyMode::Illuminance => {
                    RegionPolicy::Illuminance(IlluminancePolicyState::new(rc.deadband_fraction, rc.settle_s)?)
                }
                PolicyMode::Marker => {
                    let spec =
                        rc.marker.ok_or_else(|| Error::Config(format!("marker region {id} has no initial marker")))?;
                    spec.validate()?;
                    let mut s = MarkerControllerState::new(spec);
                    s.max_size_index = rc.max_marker_size.min(MarkerSpec::MAX_SIZE_INDEX);
                    s.target_percentage = rc.target_percentage;
                    s.eink_latency_s = rc.eink_latency_s;
                    RegionPolicy::Marker(s)
                }
                PolicyMode::Observe => RegionPolicy::Observe,
            };
            let (history, log) = match &config.data_dir {
                Some(dir) => {
                    let path = log_path(dir, &id);
                    let history = if path.exists() { replay(&path)? } else { Vec::new() };
                    let file = OpenOptions::new().create(true).append(true).open(&path)?;
                    (history, Some(file))
                }
                None => (Vec::new(), None),
            };
            for r in &history {
                let e = sensors.entry(r.sensor_id.clone()).or_insert(r.timestamp_ms);
                *e = (*e).max(r.timestamp_ms);
            }
            let last_image = history.iter().rev().find(|r| r.image_fresh).map(|r| (r.metrics, r.texture_class));
            let latest = history.last().cloned().map(Arc::new);
            let state = RegionState { config: rc, curve, policy, log, history, last_image };
            regions.insert(id, RegionSlot { state: Mutex::new(state), latest: RwLock::new(latest) });
        }
        Ok(Self {
            regions,
            actuators,
            sensors: Mutex::new(sensors),
            sink,
            clock,
            matcher: OnceLock::new(),
            thresholds: config.scene_change,
            predictor: config.predictor,
            dispatch: Mutex::new(DispatchStats::default()),
        })
    }

    pub fn region_ids(&self) -> impl Iterator<Item = &str> {
        self.regions.keys().map(String::as_str)
    }

    fn slot(&self, region_id: &str) -> Result<&RegionSlot> {
        self.regions.get(region_id).ok_or_else(|| Error::NotFound(format!("region {region_id}")))
    }

    fn matcher(&self) -> &MarkerMatcher {
        self.matcher.get_or_init(MarkerMatcher::new)
    }

    /// Characterize, store and act on one reading.
    pub fn ingest(&self, reading: SensorReading) -> Result<MetricsRecord> {
        let body = &reading.body;
        if body.lux.is_none() && body.image_pgm_b64.is_none() {
            return Err(Error::BadRequest("reading needs lux, image_pgm_b64 or both".into()));
        }
        if let Some(l) = body.lux {
            if !(l >= 0.0 && l.is_finite()) {
                return Err(Error::BadRequest(format!("lux must be finite and >= 0, got {l}")));
            }
        }
        let slot = self.slot(&body.region_id)?;
        let image = body.image_pgm_b64.as_deref().map(decode_image).transpose()?.map(|img| {
            if img.width == CANONICAL_WIDTH && img.height == CANONICAL_HEIGHT {
                img
            } else {
                img.resize_nearest(CANONICAL_WIDTH, CANONICAL_HEIGHT)
            }
        });
        let fresh = image
            .as_ref()
            .map(|img| compute_metrics(img, body.lux).map(|m| (m, classify_texture(&m))))
            .transpose()
            .map_err(|e| Error::BadRequest(e.to_string()))?;

        let mut state = slot.state.lock().unwrap();
        {
            let sensors = self.sensors.lock().unwrap();
            if let Some(&last) = sensors.get(&reading.sensor_id) {
                if body.timestamp_ms <= last {
                    return Err(Error::Stale(format!(
                        "sensor {} timestamp {} not after {last}",
                        reading.sensor_id, body.timestamp_ms
                    )));
                }
            }
        }

        let (metrics, texture_class, scene_change) = match fresh {
            Some((m, class)) => {
                let change = state
                    .last_image
                    .map(|(prev, _)| detect_scene_change_with(&self.thresholds, &prev, &m))
                    .unwrap_or(false);
                (m, class, change)
            }
            None => {
                let (prev, class) = state.last_image.unwrap_or((
                    ImageMetrics {
                        brightness: 0.0,
                        contrast: 0.0,
                        edge_strength: 0.0,
                        corner_count: 0,
                        illuminance: None,
                    },
                    TextureClass::Coarse,
                ));
                (ImageMetrics { illuminance: body.lux, ..prev }, class, false)
            }
        };
        let now = SimTime(body.timestamp_ms);
        let mut record = MetricsRecord {
            region_id: body.region_id.clone(),
            sensor_id: reading.sensor_id.clone(),
            timestamp_ms: body.timestamp_ms,
            metrics,
            texture_class,
            scene_change,
            image_fresh: image.is_some(),
            marker_match: None,
            marker_phase: None,
        };

        let mut commands: Vec<(String, CommandPayload)> = Vec::new();
        let st = &mut *state;
        match &mut st.policy {
            RegionPolicy::Illuminance(p) => {
                if record.image_fresh {
                    p.set_texture(texture_class);
                }
                if let Some(lux) = body.lux {
                    if let Some(cmd) = illuminance_control_step(p, lux, &st.curve, now)? {
                        if let Some(bulb) = &st.config.bulb {
                            commands.push((bulb.clone(), CommandPayload::SetBrightness(cmd)));
                        }
                    }
                }
            }
            RegionPolicy::Marker(m) => {
                if let Some(img) = &image {
                    let report = self.matcher().observe(m.marker.pattern, img);
                    record.marker_match = Some(report);
                    for action in marker_control_step(m, &report, texture_class, now) {
                        match action {
                            MarkerAction::DriveLux { lux } => {
                                if let Some(bulb) = &st.config.bulb {
                                    let cmd = st.curve.invert(lux).command;
                                    commands.push((bulb.clone(), CommandPayload::SetBrightness(cmd)));
                                }
                            }
                            MarkerAction::ShowMarker { spec } => {
                                if let Some(eink) = &st.config.eink {
                                    commands.push((eink.clone(), CommandPayload::SetMarker(spec)));
                                }
                            }
                        }
                    }
                }
                record.marker_phase = Some(m.phase);
            }
            RegionPolicy::Observe => {}
        }

        if let Some(f) = &mut st.log {
            let mut line = serde_json::to_vec(&record)?;
            line.push(b'\n');
            f.write_all(&line)?;
            f.flush()?;
        }
        if record.image_fresh {
            st.last_image = Some((record.metrics, record.texture_class));
        }
        st.history.push(record.clone());
        *slot.latest.write().unwrap() = Some(Arc::new(record.clone()));
        self.sensors.lock().unwrap().insert(reading.sensor_id.clone(), body.timestamp_ms);
        drop(state);

        for (actuator_id, payload) in commands {
            self.dispatch_command(&actuator_id, CommandBody { payload, issued_at_ms: body.timestamp_ms })?;
        }
        Ok(record)
    }

    pub fn latest(&self, region_id: &str) -> Result<MetricsRecord> {
        self.slot(region_id)?
            .latest
            .read()
            .unwrap()
            .as_deref()
            .cloned()
            .ok_or_else(|| Error::NotFound(format!("no records for region {region_id}")))
    }

    pub fn history(&self, region_id: &str) -> Result<Vec<MetricsRecord>> {
        Ok(self.slot(region_id)?.state.lock().unwrap().history.clone())
    }

    pub fn marker_state(&self, region_id: &str) -> Result<Option<MarkerControllerState>> {
        Ok(match &self.slot(region_id)?.state.lock().unwrap().policy {
            RegionPolicy::Marker(m) => Some(m.clone()),
            _ => None,
        })
    }

    pub fn trend(&self, region_id: &str, window_s: f64) -> Result<TrendSummary> {
        if !(window_s > 0.0 && window_s.is_finite()) {
            return Err(Error::BadRequest(format!("window_s must be > 0, got {window_s}")));
        }
        let now = self.clock.now_ms();
        let from = now.saturating_sub((window_s * 1000.0).round() as u64);
        let state = self.slot(region_id)?.state.lock().unwrap();
        let recs: Vec<&MetricsRecord> = state.history.iter().filter(|r| r.timestamp_ms >= from).collect();
        if recs.is_empty() {
            return Err(Error::NotFound(format!("no records for {region_id} in the last {window_s} s")));
        }
        let col =
            |f: fn(&ImageMetrics) -> f64| Stat::of(&recs.iter().map(|r| f(&r.metrics)).collect::<Vec<_>>()).unwrap();
        let lux: Vec<f64> = recs.iter().filter_map(|r| r.metrics.illuminance).collect();
        Ok(TrendSummary {
            region_id: region_id.to_string(),
            window_s,
            from_ms: from,
            to_ms: now,
            sample_count: recs.len(),
            change_events: recs.iter().filter(|r| r.scene_change).count(),
            brightness: col(|m| m.brightness),
            contrast: col(|m| m.contrast),
            edge_strength: col(|m| m.edge_strength),
            corner_count: col(|m| m.corner_count as f64),
            illuminance: Stat::of(&lux),
        })
    }

    /// Hand a command to its actuator and report how long acceptance took.
    pub fn dispatch_command(&self, actuator_id: &str, body: CommandBody) -> Result<Acknowledgment> {
        let (kind, _) =
            self.actuators.get(actuator_id).ok_or_else(|| Error::NotFound(format!("actuator {actuator_id}")))?;
        match (kind, &body.payload) {
            (ActuatorKind::Bulb, CommandPayload::SetBrightness(p)) => {
                if !(0.0..=100.0).contains(p) {
                    return Err(Error::BadRequest(format!("brightness {p} not in 0..=100")));
                }
            }
            (ActuatorKind::EInk, CommandPayload::SetMarker(spec)) => {
                spec.validate().map_err(|e| Error::BadRequest(e.to_string()))?
            }
            (_, p) => {
                return Err(Error::BadRequest(format!("{} not supported by actuator {actuator_id}", p.kind())));
            }
        }
        let cmd = ActuatorCommand {
            actuator_id: actuator_id.to_string(),
            payload: body.payload,
            issued_at_ms: body.issued_at_ms,
        };
        let started = Instant::now();
        self.sink.accept(&cmd)?;
        let latency = started.elapsed().as_secs_f64() * 1000.0;
        let mut stats = self.dispatch.lock().unwrap();
        stats.count += 1;
        stats.max_latency_ms = stats.max_latency_ms.max(latency);
        Ok(Acknowledgment { dispatch_latency_ms: latency })
    }

    pub fn dispatch_stats(&self) -> DispatchStats {
        *self.dispatch.lock().unwrap()
    }

    /// Predict tracking quality for a region. Missing inputs come from the
    /// region's latest record.
    pub fn predict(
        &self,
        region_id: &str,
        texture: Option<TextureLabel>,
        lux: Option<f64>,
    ) -> Result<TrackingPrediction> {
        let slot = self.slot(region_id)?;
        let latest = slot.latest.read().unwrap().clone();
        let texture = match texture {
            Some(t) => t,
            None => match latest.as_deref() {
                Some(r) => match r.texture_class {
                    TextureClass::Coarse => TextureLabel::Checkerboard,
                    TextureClass::Fine => TextureLabel::FinePaperLike,
                },
                None => return Err(Error::NotFound(format!("no texture known for region {region_id}"))),
            },
        };
        let lux = match lux.or_else(|| latest.as_deref().and_then(|r| r.metrics.illuminance)) {
            Some(l) => l,
            None => return Err(Error::NotFound(format!("no illuminance known for region {region_id}"))),
        };
        predict_tracking_with(&self.predictor, texture, lux)
    }
}
