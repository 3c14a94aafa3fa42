use std::path::Path;
use std::sync::Arc;
use std::time::Instant;

use ambientd::clock::SimTime;
use ambientd::edge::{
    encode_image, BackgroundServer, CommandBody, CommandPayload, EdgeClient, EdgeConfig, EdgeService, ManualClock,
    PolicyMode, QueueSink, ReadingBody, RegionConfig, SensorReading,
};
use ambientd::image::SyntheticImage;
use ambientd::scene::{
    apply_bulb_command, noise_sigma, render_region, BulbState, EInkState, EnvironmentState, LuxCurve, MarkerPattern,
    MarkerSpec, Region, RenderConfig, TextureSpec,
};
use ambientd::vision::{TextureClass, CANONICAL_HEIGHT, CANONICAL_WIDTH};
use ambientd::Error;

fn open(dir: Option<&Path>, policy: PolicyMode) -> (Arc<EdgeService>, Arc<QueueSink>, Arc<ManualClock>) {
    let sink = Arc::new(QueueSink::default());
    let clock = Arc::new(ManualClock::new(0));
    let mut desk = RegionConfig::new("desk");
    desk.policy = policy;
    desk.bulb = Some("bulb-1".into());
    desk.eink = Some("eink-1".into());
    desk.marker = Some(MarkerSpec::new(MarkerPattern::BinaryGridA, 0).unwrap());
    let svc = EdgeService::open(
        EdgeConfig {
            data_dir: dir.map(Path::to_path_buf),
            regions: vec![desk, RegionConfig::new("shelf")],
            ..Default::default()
        },
        sink.clone(),
        clock.clone(),
    )
    .unwrap();
    (Arc::new(svc), sink, clock)
}

fn body(region: &str, ts: u64, lux: Option<f64>, img: Option<&SyntheticImage>) -> ReadingBody {
    ReadingBody { region_id: region.into(), timestamp_ms: ts, lux, image_pgm_b64: img.map(encode_image) }
}

fn reading(sensor: &str, ts: u64, lux: Option<f64>, img: Option<&SyntheticImage>) -> SensorReading {
    SensorReading { sensor_id: sensor.into(), body: body("desk", ts, lux, img) }
}

fn frame(texture: TextureSpec, lux: f64, seed: u64) -> SyntheticImage {
    render_region(&Region::new("desk", texture, lux), seed, CANONICAL_WIDTH, CANONICAL_HEIGHT).unwrap()
}

fn checker() -> TextureSpec {
    TextureSpec::Checkerboard { cell: 16, low: 0.1, high: 0.9 }
}

#[test]
fn put_then_get_is_bit_exact_over_http() {
    let (svc, _, _) = open(None, PolicyMode::Observe);
    let server = BackgroundServer::start(svc, "127.0.0.1:0").unwrap();
    let client = EdgeClient::new(server.base_url());
    assert_eq!(client.health().unwrap()["status"], "ok");
    for (i, lux) in [83.7, 301.25, 912.0].into_iter().enumerate() {
        let img = frame(TextureSpec::Speckle { frequency: 0.3, low: 0.1, high: 0.9, seed: 7 }, lux, i as u64);
        let stored = client.put_reading("cam", &body("desk", 1000 * (i as u64 + 1), Some(lux), Some(&img))).unwrap();
        let fetched = client.latest("desk").unwrap();
        assert_eq!(fetched, stored);
        assert_eq!(fetched.metrics.brightness.to_bits(), stored.metrics.brightness.to_bits());
        assert_eq!(fetched.metrics.contrast.to_bits(), stored.metrics.contrast.to_bits());
        assert_eq!(fetched.metrics.edge_strength.to_bits(), stored.metrics.edge_strength.to_bits());
        // And the same as characterizing the image locally.
        let local = ambientd::vision::compute_metrics(&img, Some(lux)).unwrap();
        assert_eq!(fetched.metrics, local);
    }
}

#[test]
fn repeated_gets_return_identical_bytes() {
    let (svc, _, _) = open(None, PolicyMode::Observe);
    let server = BackgroundServer::start(svc, "127.0.0.1:0").unwrap();
    let client = EdgeClient::new(server.base_url());
    client.put_reading("cam", &body("desk", 5, Some(250.0), Some(&frame(checker(), 250.0, 1)))).unwrap();
    let first = client.latest_bytes("desk").unwrap();
    for _ in 0..10 {
        assert_eq!(client.latest_bytes("desk").unwrap(), first);
    }
}

#[test]
fn http_error_statuses() {
    let (svc, _, _) = open(None, PolicyMode::Observe);
    let server = BackgroundServer::start(svc, "127.0.0.1:0").unwrap();
    let client = EdgeClient::new(server.base_url());
    assert!(matches!(client.latest("desk"), Err(Error::NotFound(_))));
    assert!(matches!(client.latest("nowhere"), Err(Error::NotFound(_))));
    assert!(matches!(client.put_reading("cam", &body("nowhere", 1, Some(1.0), None)), Err(Error::NotFound(_))));
    client.put_reading("cam", &body("desk", 10, Some(100.0), None)).unwrap();
    assert!(matches!(client.put_reading("cam", &body("desk", 10, Some(100.0), None)), Err(Error::Stale(_))));
    let mut bad = body("desk", 20, None, None);
    bad.image_pgm_b64 = Some("not base64 at all!".into());
    assert!(matches!(client.put_reading("cam", &bad), Err(Error::BadRequest(_))));
    assert!(matches!(client.put_reading("cam", &body("desk", 21, None, None)), Err(Error::BadRequest(_))));
    let cmd = CommandBody { payload: CommandPayload::SetBrightness(50.0), issued_at_ms: 0 };
    assert!(matches!(client.post_command("ghost", &cmd), Err(Error::NotFound(_))));
    assert!(matches!(client.trend("desk", 0.0), Err(Error::BadRequest(_))));
}

#[test]
fn stale_readings_are_rejected_per_sensor() {
    let (svc, _, _) = open(None, PolicyMode::Observe);
    svc.ingest(reading("cam", 100, Some(50.0), None)).unwrap();
    assert!(matches!(svc.ingest(reading("cam", 100, Some(50.0), None)), Err(Error::Stale(_))));
    assert!(matches!(svc.ingest(reading("cam", 99, Some(50.0), None)), Err(Error::Stale(_))));
    // Another sensor keeps its own clock.
    svc.ingest(reading("lux-meter", 100, Some(50.0), None)).unwrap();
    assert_eq!(svc.history("desk").unwrap().len(), 2);
}

#[test]
fn flat_image_contrast_is_the_noise_level() {
    let (svc, _, _) = open(None, PolicyMode::Observe);
    let img = frame(TextureSpec::Flat { level: 0.5 }, 300.0, 3);
    let rec = svc.ingest(reading("cam", 1, Some(300.0), Some(&img))).unwrap();
    let sigma = noise_sigma(&RenderConfig::default(), 300.0);
    assert!((rec.metrics.contrast - sigma).abs() < 0.05 * sigma, "{} vs {sigma}", rec.metrics.contrast);
    assert_eq!(rec.texture_class, TextureClass::Coarse);
    assert!(rec.image_fresh);
}

#[test]
fn lux_only_reading_reuses_last_image_class() {
    let (svc, _, _) = open(None, PolicyMode::Observe);
    let img = frame(TextureSpec::Speckle { frequency: 0.5, low: 0.2, high: 0.8, seed: 4 }, 750.0, 1);
    let first = svc.ingest(reading("cam", 1, Some(750.0), Some(&img))).unwrap();
    let second = svc.ingest(reading("lux", 2, Some(720.0), None)).unwrap();
    assert!(!second.image_fresh);
    assert_eq!(second.texture_class, first.texture_class);
    assert_eq!(second.metrics.illuminance, Some(720.0));
    assert_eq!(second.metrics.brightness, first.metrics.brightness);
}

#[test]
fn trend_summarizes_a_brightness_jump() {
    let (svc, _, clock) = open(None, PolicyMode::Observe);
    let at = |level: f64, seed| frame(TextureSpec::Flat { level }, 500.0, seed);
    // Flat frames at 500 lux have brightness close to 255 * level.
    let dark = at(100.0 / 255.0, 1);
    let bright = at(140.0 / 255.0, 2);
    let a = svc.ingest(reading("cam", 10_000, None, Some(&dark))).unwrap();
    let b = svc.ingest(reading("cam", 15_000, None, Some(&bright))).unwrap();
    assert!(b.scene_change);
    clock.set(16_000);
    let t = svc.trend("desk", 60.0).unwrap();
    assert_eq!(t.sample_count, 2);
    assert!(t.change_events >= 1);
    let mean = (a.metrics.brightness + b.metrics.brightness) / 2.0;
    assert!((t.brightness.mean - mean).abs() < 1e-9);
    assert!((t.brightness.mean - 120.0).abs() < 0.5, "{}", t.brightness.mean);
    assert_eq!(t.brightness.min, a.metrics.brightness);
    assert_eq!(t.brightness.max, b.metrics.brightness);

    // A window that only reaches the last record.
    let single = svc.trend("desk", 2.0).unwrap();
    assert_eq!(single.sample_count, 1);
    assert_eq!(single.contrast.min, single.contrast.max);
    assert_eq!(single.contrast.min, single.contrast.mean);
    clock.set(500_000);
    assert!(matches!(svc.trend("desk", 60.0), Err(Error::NotFound(_))));
}

#[test]
fn dispatch_is_fast_and_checked() {
    let (svc, sink, _) = open(None, PolicyMode::Observe);
    for i in 0..50 {
        let ack = svc
            .dispatch_command("bulb-1", CommandBody { payload: CommandPayload::SetBrightness(50.0), issued_at_ms: i })
            .unwrap();
        assert!(ack.dispatch_latency_ms < 500.0);
    }
    let spec = MarkerSpec::new(MarkerPattern::BinaryGridB, 2).unwrap();
    svc.dispatch_command("eink-1", CommandBody { payload: CommandPayload::SetMarker(spec), issued_at_ms: 60 }).unwrap();
    assert_eq!(sink.drain().len(), 51);
    assert!(svc.dispatch_stats().max_latency_ms < 500.0);
    assert!(matches!(
        svc.dispatch_command("bulb-1", CommandBody { payload: CommandPayload::SetMarker(spec), issued_at_ms: 0 }),
        Err(Error::BadRequest(_))
    ));
    assert!(matches!(
        svc.dispatch_command("bulb-1", CommandBody { payload: CommandPayload::SetBrightness(101.0), issued_at_ms: 0 }),
        Err(Error::BadRequest(_))
    ));
    assert!(matches!(
        svc.dispatch_command("lamp-9", CommandBody { payload: CommandPayload::SetBrightness(1.0), issued_at_ms: 0 }),
        Err(Error::NotFound(_))
    ));
}

#[test]
fn actuator_effects_land_after_their_latency() {
    let env = EnvironmentState::new(vec![Region::new("desk", checker(), 80.0)], LuxCurve::default()).unwrap();
    let bulb = BulbState::new(50.0, 0.3).unwrap();
    assert_eq!(bulb.effective_at(SimTime(10_000)), SimTime(10_300));
    let after = apply_bulb_command(&bulb, &env, "desk").unwrap();
    assert_eq!(after.region("desk").unwrap().illuminance, 505.0);
    assert_eq!(env.region("desk").unwrap().illuminance, 80.0);

    let small = MarkerSpec::new(MarkerPattern::BinaryGridA, 0).unwrap();
    let large = MarkerSpec::new(MarkerPattern::BinaryGridA, 2).unwrap();
    let (mut eink, due) = EInkState::new(small).apply_eink_update(large, SimTime(4_000));
    let due = due.unwrap();
    // One simulation tick is 1 ms.
    assert!(due.0.abs_diff(5_000) <= 1, "{due:?}");
    assert_eq!(eink.advance(SimTime(due.0 - 1)), None);
    assert_eq!(eink.displayed, small);
    assert_eq!(eink.advance(due), Some(large));
    assert_eq!(eink.displayed, large);
}

#[test]
fn log_replays_after_restart() {
    let dir = tempfile::tempdir().unwrap();
    let latest = {
        let (svc, _, _) = open(Some(dir.path()), PolicyMode::Illuminance);
        for k in 0..12u64 {
            let lux = 60.0 + 40.0 * k as f64;
            let img = (k % 3 == 0).then(|| frame(checker(), lux, k));
            svc.ingest(reading("cam", 5000 * (k + 1), Some(lux), img.as_ref())).unwrap();
        }
        svc.latest("desk").unwrap()
    };
    let (svc, _, _) = open(Some(dir.path()), PolicyMode::Illuminance);
    assert_eq!(svc.latest("desk").unwrap(), latest);
    assert_eq!(svc.history("desk").unwrap().len(), 12);
    // The sensor clock survives too.
    assert!(matches!(svc.ingest(reading("cam", 60_000, Some(1.0), None)), Err(Error::Stale(_))));
    svc.ingest(reading("cam", 60_001, Some(1.0), None)).unwrap();

    // Survives a restart behind HTTP as well.
    drop(svc);
    let (svc, _, _) = open(Some(dir.path()), PolicyMode::Illuminance);
    let server = BackgroundServer::start(svc, "127.0.0.1:0").unwrap();
    assert_eq!(EdgeClient::new(server.base_url()).latest("desk").unwrap().timestamp_ms, 60_001);
}

#[test]
fn concurrent_ingests_are_serializable() {
    let dir = tempfile::tempdir().unwrap();
    let (svc, _, _) = open(Some(dir.path()), PolicyMode::Illuminance);
    let sensors = 8;
    let per_sensor = 10u64;
    std::thread::scope(|s| {
        for sensor in 0..sensors {
            let svc = svc.clone();
            s.spawn(move || {
                for k in 0..per_sensor {
                    let img = (k % 4 == 0).then(|| frame(checker(), 200.0, k));
                    let r = reading(&format!("s{sensor}"), k + 1, Some(100.0 + sensor as f64), img.as_ref());
                    svc.ingest(r).unwrap();
                }
            });
        }
    });
    let history = svc.history("desk").unwrap();
    assert_eq!(history.len(), sensors * per_sensor as usize);
    // Each sensor's records appear in its own send order.
    for sensor in 0..sensors {
        let ts: Vec<u64> =
            history.iter().filter(|r| r.sensor_id == format!("s{sensor}")).map(|r| r.timestamp_ms).collect();
        assert_eq!(ts, (1..=per_sensor).collect::<Vec<_>>());
    }
    drop(svc);
    let log = std::fs::read_to_string(dir.path().join("regions").join("desk.jsonl")).unwrap();
    let lines: Vec<&str> = log.lines().collect();
    assert_eq!(lines.len(), history.len());
    for (line, rec) in lines.iter().zip(&history) {
        let parsed: ambientd::edge::MetricsRecord = serde_json::from_str(line).unwrap();
        assert_eq!(&parsed, rec);
    }
}

#[test]
fn illuminance_loop_fits_in_one_sensing_period() {
    let (svc, sink, clock) = open(None, PolicyMode::Illuminance);
    let texture = TextureSpec::Checkerboard { cell: 24, low: 0.1, high: 0.9 };
    let mut lux = 80.0;
    let curve = LuxCurve::default();
    for k in 0..6u64 {
        let now = 5000 * (k + 1);
        clock.set(now);
        let img = frame(texture.clone(), lux, k);
        let started = Instant::now();
        svc.ingest(reading("cam", now, Some(lux), Some(&img))).unwrap();
        let commands = sink.drain();
        assert!(started.elapsed().as_secs_f64() < 5.0);
        for c in commands {
            if let CommandPayload::SetBrightness(p) = c.payload {
                lux = curve.lux(p);
            }
        }
    }
    assert!((lux - 300.0).abs() <= 30.0, "{lux}");
}
