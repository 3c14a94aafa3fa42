use std::collections::HashMap;
use std::future::Future;
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{Path, Query, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post, put};
use axum::{Json, Router};
use serde::de::DeserializeOwned;
use serde_json::json;
use tokio::net::TcpListener;

use super::service::EdgeService;
use super::wire::{CommandBody, ReadingBody, SensorReading};
use crate::error::Error;
use crate::policy::TextureLabel;

/// Error as an HTTP response with a `{"error": ...}` body.
pub struct ApiError(pub Error);

impl From<Error> for ApiError {
    fn from(e: Error) -> Self {
        ApiError(e)
    }
}

pub fn status_of(e: &Error) -> StatusCode {
    match e {
        Error::NotFound(_) => StatusCode::NOT_FOUND,
        Error::Stale(_) => StatusCode::CONFLICT,
        Error::BadRequest(_) | Error::InvalidArgument(_) | Error::Pgm(_) | Error::Json(_) => StatusCode::BAD_REQUEST,
        _ => StatusCode::INTERNAL_SERVER_ERROR,
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (status_of(&self.0), Json(json!({ "error": self.0.to_string() }))).into_response()
    }
}

type ApiResult<T> = Result<T, ApiError>;

fn parse_body<T: DeserializeOwned>(bytes: &[u8]) -> ApiResult<T> {
    let de = &mut serde_json::Deserializer::from_slice(bytes);
    serde_path_to_error::deserialize(de).map_err(|e| ApiError(Error::BadRequest(e.to_string())))
}

async fn blocking<T: Send + 'static>(f: impl FnOnce() -> crate::Result<T> + Send + 'static) -> ApiResult<T> {
    tokio::task::spawn_blocking(f).await.map_err(|e| ApiError(Error::Transport(e.to_string())))?.map_err(ApiError)
}

async fn put_reading(
    State(svc): State<Arc<EdgeService>>,
    Path(sensor_id): Path<String>,
    body: Bytes,
) -> ApiResult<Response> {
    let body: ReadingBody = parse_body(&body)?;
    let record = blocking(move || svc.ingest(SensorReading { sensor_id, body })).await?;
    Ok(Json(record).into_response())
}

async fn get_latest(State(svc): State<Arc<EdgeService>>, Path(region_id): Path<String>) -> ApiResult<Response> {
    Ok(Json(svc.latest(&region_id)?).into_response())
}

fn query_f64(q: &HashMap<String, String>, key: &str) -> ApiResult<Option<f64>> {
    q.get(key)
        .map(|v| v.parse::<f64>().map_err(|_| ApiError(Error::BadRequest(format!("{key}: not a number: {v:?}")))))
        .transpose()
}

async fn get_trend(
    State(svc): State<Arc<EdgeService>>,
    Path(region_id): Path<String>,
    Query(q): Query<HashMap<String, String>>,
) -> ApiResult<Response> {
    let window =
        query_f64(&q, "window_s")?.ok_or_else(|| ApiError(Error::BadRequest("window_s is required".into())))?;
    Ok(Json(blocking(move || svc.trend(&region_id, window)).await?).into_response())
}

async fn get_prediction(
    State(svc): State<Arc<EdgeService>>,
    Path(region_id): Path<String>,
    Query(q): Query<HashMap<String, String>>,
) -> ApiResult<Response> {
    let texture = q.get("texture").map(|t| t.parse::<TextureLabel>()).transpose()?;
    let lux = query_f64(&q, "lux")?;
    Ok(Json(svc.predict(&region_id, texture, lux)?).into_response())
}

async fn post_command(
    State(svc): State<Arc<EdgeService>>,
    Path(actuator_id): Path<String>,
    body: Bytes,
) -> ApiResult<Response> {
    let body: CommandBody = parse_body(&body)?;
    let ack = blocking(move || svc.dispatch_command(&actuator_id, body)).await?;
    Ok((StatusCode::ACCEPTED, Json(ack)).into_response())
}

async fn health() -> Json<serde_json::Value> {
    Json(json!({ "status": "ok" }))
}

pub fn router(service: Arc<EdgeService>) -> Router {
    Router::new()
        .route("/v1/sensors/{sensor_id}/readings", put(put_reading))
        .route("/v1/regions/{region_id}/metrics/latest", get(get_latest))
        .route("/v1/regions/{region_id}/metrics/trend", get(get_trend))
        .route("/v1/regions/{region_id}/prediction", get(get_prediction))
        .route("/v1/actuators/{actuator_id}/commands", post(post_command))
        .route("/v1/health", get(health))
        .with_state(service)
}

/// Serve the API on `listener` until `shutdown` resolves.
pub async fn serve(
    listener: TcpListener,
    service: Arc<EdgeService>,
    shutdown: impl Future<Output = ()> + Send + 'static,
) -> std::io::Result<()> {
    axum::serve(listener, router(service)).with_graceful_shutdown(shutdown).await
}

/// API server on its own runtime thread, stopped on drop.
pub struct BackgroundServer {
    addr: std::net::SocketAddr,
    shutdown: Option<tokio::sync::oneshot::Sender<()>>,
    thread: Option<std::thread::JoinHandle<std::io::Result<()>>>,
}

impl BackgroundServer {
    /// Bind `addr` (port 0 picks a free one) and start serving.
    pub fn start(service: Arc<EdgeService>, addr: &str) -> std::io::Result<Self> {
        let std_listener = std::net::TcpListener::bind(addr)?;
        std_listener.set_nonblocking(true)?;
        let local = std_listener.local_addr()?;
        let (tx, rx) = tokio::sync::oneshot::channel::<()>();
        let thread = std::thread::Builder::new().name("edge-http".into()).spawn(move || {
            let rt = tokio::runtime::Builder::new_multi_thread().worker_threads(2).enable_all().build()?;
            rt.block_on(async move {
                let listener = TcpListener::from_std(std_listener)?;
                serve(listener, service, async {
                    let _ = rx.await;
                })
                .await
            })
        })?;
        Ok(Self { addr: local, shutdown: Some(tx), thread: Some(thread) })
    }

    pub fn addr(&self) -> std::net::SocketAddr {
        self.addr
    }

    pub fn base_url(&self) -> String {
        format!("http://{}", self.addr)
    }
}

impl Drop for BackgroundServer {
    fn drop(&mut self) {
        if let Some(tx) = self.shutdown.take() {
            let _ = tx.send(());
        }
        if let Some(t) = self.thread.take() {
            let _ = t.join();
        }
    }
}
