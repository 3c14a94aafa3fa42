//! Edge server: sensor ingestion, characterization, policy execution,
//! actuator dispatch, per-region NDJSON persistence and the HTTP API.

mod client;
mod http;
mod service;
mod wire;

pub use client::EdgeClient;
pub use http::{router, serve, status_of, ApiError, BackgroundServer};
pub use service::{
    encode_image, ActuatorKind, ActuatorSink, Clock, DispatchStats, EdgeConfig, EdgeService, ManualClock, PolicyMode,
    QueueSink, RegionConfig, StderrSink, SystemClock,
};
pub use wire::{
    Acknowledgment, ActuatorCommand, CommandBody, CommandPayload, MetricsRecord, ReadingBody, SensorReading, Stat,
    TrendSummary,
};

pub const ENV_DATA_DIR: &str = "AMBIENTD_DATA_DIR";
pub const ENV_BIND_ADDR: &str = "AMBIENTD_BIND_ADDR";
pub const DEFAULT_BIND_ADDR: &str = "127.0.0.1:8080";
