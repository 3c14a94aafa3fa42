use std::time::Duration;

use serde::de::DeserializeOwned;
use serde::Serialize;

use super::wire::{Acknowledgment, CommandBody, MetricsRecord, ReadingBody, TrendSummary};
use crate::error::{Error, Result};
use crate::policy::{TextureLabel, TrackingPrediction};

/// Blocking HTTP client for the edge API.
#[derive(Debug, Clone)]
pub struct EdgeClient {
    agent: ureq::Agent,
    base: String,
}

impl EdgeClient {
    /// `base` like `http://127.0.0.1:8080`.
    pub fn new(base: impl Into<String>) -> Self {
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .http_status_as_error(false)
            .timeout_global(Some(Duration::from_secs(30)))
            .build()
            .into();
        Self { agent, base: base.into().trim_end_matches('/').to_string() }
    }

    fn finish<T: DeserializeOwned>(
        &self,
        result: std::result::Result<ureq::http::Response<ureq::Body>, ureq::Error>,
    ) -> Result<T> {
        let mut resp = result.map_err(|e| Error::Transport(e.to_string()))?;
        let status = resp.status().as_u16();
        if (200..300).contains(&status) {
            return resp.body_mut().read_json::<T>().map_err(|e| Error::Transport(format!("decoding response: {e}")));
        }
        let msg = resp
            .body_mut()
            .read_json::<serde_json::Value>()
            .ok()
            .and_then(|v| v.get("error").and_then(|e| e.as_str()).map(str::to_string))
            .unwrap_or_else(|| format!("HTTP {status}"));
        Err(match status {
            400 => Error::BadRequest(msg),
            404 => Error::NotFound(msg),
            409 => Error::Stale(msg),
            _ => Error::Transport(format!("HTTP {status}: {msg}")),
        })
    }

    fn get<T: DeserializeOwned>(&self, path: &str) -> Result<T> {
        self.finish(self.agent.get(format!("{}{path}", self.base)).call())
    }

    fn send<B: Serialize, T: DeserializeOwned>(&self, method: &str, path: &str, body: &B) -> Result<T> {
        let url = format!("{}{path}", self.base);
        let result = match method {
            "PUT" => self.agent.put(url).send_json(body),
            _ => self.agent.post(url).send_json(body),
        };
        self.finish(result)
    }

    pub fn health(&self) -> Result<serde_json::Value> {
        self.get("/v1/health")
    }

    pub fn put_reading(&self, sensor_id: &str, body: &ReadingBody) -> Result<MetricsRecord> {
        self.send("PUT", &format!("/v1/sensors/{sensor_id}/readings"), body)
    }

    pub fn latest(&self, region_id: &str) -> Result<MetricsRecord> {
        self.get(&format!("/v1/regions/{region_id}/metrics/latest"))
    }

    /// Raw response body of the latest-record endpoint.
    pub fn latest_bytes(&self, region_id: &str) -> Result<Vec<u8>> {
        let url = format!("{}/v1/regions/{region_id}/metrics/latest", self.base);
        let mut resp = self.agent.get(url).call().map_err(|e| Error::Transport(e.to_string()))?;
        if resp.status().as_u16() != 200 {
            return Err(Error::NotFound(format!("HTTP {}", resp.status())));
        }
        resp.body_mut().read_to_vec().map_err(|e| Error::Transport(e.to_string()))
    }

    pub fn trend(&self, region_id: &str, window_s: f64) -> Result<TrendSummary> {
        self.get(&format!("/v1/regions/{region_id}/metrics/trend?window_s={window_s}"))
    }

    pub fn prediction(
        &self,
        region_id: &str,
        texture: Option<TextureLabel>,
        lux: Option<f64>,
    ) -> Result<TrackingPrediction> {
        let mut q = Vec::new();
        if let Some(t) = texture {
            q.push(format!("texture={t}"));
        }
        if let Some(l) = lux {
            q.push(format!("lux={l}"));
        }
        self.get(&format!("/v1/regions/{region_id}/prediction?{}", q.join("&")))
    }

    pub fn post_command(&self, actuator_id: &str, body: &CommandBody) -> Result<Acknowledgment> {
        self.send("POST", &format!("/v1/actuators/{actuator_id}/commands"), body)
    }
}
