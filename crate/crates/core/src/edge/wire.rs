use serde::{Deserialize, Serialize};

use crate::policy::MarkerPhase;
use crate::scene::MarkerSpec;
use crate::vision::{ImageMetrics, MatchReport, TextureClass};

/// Body of `PUT /v1/sensors/{sensor_id}/readings`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReadingBody {
    pub region_id: String,
    pub timestamp_ms: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lux: Option<f64>,
    /// Base64 of a binary (P5) PGM.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub image_pgm_b64: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensorReading {
    pub sensor_id: String,
    #[serde(flatten)]
    pub body: ReadingBody,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRecord {
    pub region_id: String,
    pub sensor_id: String,
    pub timestamp_ms: u64,
    pub metrics: ImageMetrics,
    pub texture_class: TextureClass,
    pub scene_change: bool,
    /// False when the image metrics were carried over from an earlier
    /// reading because this one had no image.
    pub image_fresh: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub marker_match: Option<MatchReport>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub marker_phase: Option<MarkerPhase>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "payload", rename_all = "kebab-case")]
pub enum CommandPayload {
    /// Bulb brightness, percent.
    SetBrightness(f64),
    SetMarker(MarkerSpec),
}

impl CommandPayload {
    pub fn kind(&self) -> &'static str {
        match self {
            CommandPayload::SetBrightness(_) => "set-brightness",
            CommandPayload::SetMarker(_) => "set-marker",
        }
    }
}

/// Body of `POST /v1/actuators/{actuator_id}/commands`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CommandBody {
    #[serde(flatten)]
    pub payload: CommandPayload,
    pub issued_at_ms: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActuatorCommand {
    pub actuator_id: String,
    #[serde(flatten)]
    pub payload: CommandPayload,
    pub issued_at_ms: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Acknowledgment {
    pub dispatch_latency_ms: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Stat {
    pub min: f64,
    pub mean: f64,
    pub max: f64,
}

impl Stat {
    pub fn of(values: &[f64]) -> Option<Stat> {
        if values.is_empty() {
            return None;
        }
        let min = values.iter().cloned().fold(f64::INFINITY, f64::min);
        let max = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let mean = values.iter().sum::<f64>() / values.len() as f64;
        Some(Stat { min, mean, max })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrendSummary {
    pub region_id: String,
    pub window_s: f64,
    pub from_ms: u64,
    pub to_ms: u64,
    pub sample_count: usize,
    pub change_events: usize,
    pub brightness: Stat,
    pub contrast: Stat,
    pub edge_strength: Stat,
    pub corner_count: Stat,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub illuminance: Option<Stat>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scene::MarkerPattern;

    #[test]
    fn command_body_wire_shape() {
        let body: CommandBody =
            serde_json::from_str(r#"{"kind":"set-brightness","payload":50.0,"issued_at_ms":7}"#).unwrap();
        assert_eq!(body.payload, CommandPayload::SetBrightness(50.0));
        let marker = CommandBody {
            payload: CommandPayload::SetMarker(MarkerSpec::new(MarkerPattern::BinaryGridB, 2).unwrap()),
            issued_at_ms: 1,
        };
        let json = serde_json::to_string(&marker).unwrap();
        assert_eq!(
            json,
            r#"{"kind":"set-marker","payload":{"pattern":"binary-grid-B","size_index":2},"issued_at_ms":1}"#
        );
        assert_eq!(serde_json::from_str::<CommandBody>(&json).unwrap(), marker);
    }

    #[test]
    fn mismatched_payload_rejected() {
        assert!(serde_json::from_str::<CommandBody>(r#"{"kind":"set-marker","payload":50,"issued_at_ms":7}"#).is_err());
        assert!(serde_json::from_str::<CommandBody>(r#"{"kind":"dim","payload":50,"issued_at_ms":7}"#).is_err());
    }

    #[test]
    fn reading_optional_fields() {
        let r: ReadingBody = serde_json::from_str(r#"{"region_id":"a","timestamp_ms":5,"lux":300.5}"#).unwrap();
        assert_eq!(r.lux, Some(300.5));
        assert!(r.image_pgm_b64.is_none());
        assert_eq!(serde_json::to_string(&r).unwrap(), r#"{"region_id":"a","timestamp_ms":5,"lux":300.5}"#);
    }
}
