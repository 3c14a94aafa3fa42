//! Run the edge service on a local port, push camera and light readings
//! through the HTTP API, then ask for the latest record, a trend and a
//! tracking prediction.
//!
//! cargo run --example edge_service

use std::sync::Arc;

use ambientd::edge::{
    encode_image, BackgroundServer, CommandBody, CommandPayload, EdgeClient, EdgeConfig, EdgeService, PolicyMode,
    ReadingBody, RegionConfig, StderrSink, SystemClock,
};
use ambientd::scene::{render_region, Region, TextureSpec};
use ambientd::vision::{CANONICAL_HEIGHT, CANONICAL_WIDTH};

fn main() -> ambientd::Result<()> {
    let data_dir = std::env::temp_dir().join(format!("ambientd-example-{}", std::process::id()));
    let mut desk = RegionConfig::new("desk");
    desk.policy = PolicyMode::Illuminance;
    desk.bulb = Some("bulb-desk".into());
    let service = EdgeService::open(
        EdgeConfig { data_dir: Some(data_dir.clone()), regions: vec![desk], ..Default::default() },
        Arc::new(StderrSink),
        Arc::new(SystemClock),
    )?;
    let server = BackgroundServer::start(Arc::new(service), "127.0.0.1:0")?;
    let client = EdgeClient::new(server.base_url());
    println!("serving on {}", server.base_url());

    let now_ms = std::time::SystemTime::now().duration_since(std::time::UNIX_EPOCH).unwrap().as_millis() as u64;
    let texture = TextureSpec::Checkerboard { cell: 16, low: 0.1, high: 0.9 };
    for (k, lux) in [90.0, 95.0, 310.0].into_iter().enumerate() {
        let img =
            render_region(&Region::new("desk", texture.clone(), lux), k as u64, CANONICAL_WIDTH, CANONICAL_HEIGHT)?;
        let body = ReadingBody {
            region_id: "desk".into(),
            timestamp_ms: now_ms - 10_000 + 5_000 * k as u64,
            lux: Some(lux),
            image_pgm_b64: Some(encode_image(&img)),
        };
        let rec = client.put_reading("cam-desk", &body)?;
        println!(
            "stored {} lux: brightness {:.1}, {} corners, {}, scene change {}",
            lux, rec.metrics.brightness, rec.metrics.corner_count, rec.texture_class, rec.scene_change
        );
    }
    let trend = client.trend("desk", 60.0)?;
    println!(
        "trend over {} samples: brightness {:.1}..{:.1}, {} change events",
        trend.sample_count, trend.brightness.min, trend.brightness.max, trend.change_events
    );
    let p = client.prediction("desk", None, None)?;
    println!("prediction: {:.1} cm ({:?})", p.expected_error_cm, p.class);
    let ack = client.post_command(
        "bulb-desk",
        &CommandBody { payload: CommandPayload::SetBrightness(30.0), issued_at_ms: now_ms },
    )?;
    println!("manual command accepted in {:.3} ms", ack.dispatch_latency_ms);
    drop(server);
    std::fs::remove_dir_all(data_dir)?;
    Ok(())
}
