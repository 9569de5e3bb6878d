//! HTTP inference service over one immutable model.

use std::sync::Arc;
use std::time::Instant;

use axum::body::{Body, Bytes};
use axum::extract::{DefaultBodyLimit, FromRequest, Multipart, Request, State};
use axum::http::{header, StatusCode};
use axum::middleware::{self, Next};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use cryscreen::audio::{self, AudioError};
use cryscreen::{Diagnoser, PipelineError};
use serde_json::{json, Value};
use tokio::net::TcpListener;

use crate::response::{DiagnoseResponse, ErrorBody};

/// Largest accepted request body.
pub const MAX_BODY_BYTES: usize = 32 * 1024 * 1024;

pub struct AppState {
    diagnoser: Diagnoser,
}

impl AppState {
    pub fn new(diagnoser: Diagnoser) -> Arc<Self> {
        Arc::new(Self { diagnoser })
    }

    pub fn diagnoser(&self) -> &Diagnoser {
        &self.diagnoser
    }

    /// Body of `GET /v1/model`.
    pub fn model_summary(&self) -> Value {
        let d = &self.diagnoser;
        let m = d.model();
        json!({
            "model_digest": d.model_digest(),
            "feature": d.config().feature,
            "segment_len_s": d.config().segment_len_s,
            "min_segments": d.config().min_segments,
            "pooling": d.config().pooling,
            "kernel": m.kernel(),
            "dim": m.dim(),
            "n_support": m.n_support(),
            "training": m.meta(),
        })
    }
}

pub struct ApiError {
    status: StatusCode,
    body: ErrorBody,
}

impl ApiError {
    fn new(status: StatusCode, code: &str, message: impl Into<String>) -> Self {
        Self {
            status,
            body: ErrorBody {
                error: code.into(),
                message: message.into(),
                id: None,
            },
        }
    }

    fn too_large() -> Self {
        Self::new(
            StatusCode::PAYLOAD_TOO_LARGE,
            "payload_too_large",
            format!("request body exceeds {MAX_BODY_BYTES} bytes"),
        )
    }

    /// Logs the detail under a fresh id and returns only the id.
    fn internal(detail: impl std::fmt::Display) -> Self {
        let id = uuid::Uuid::new_v4().to_string();
        tracing::error!(%id, %detail, "internal error");
        let mut e = Self::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", "internal error");
        e.body.id = Some(id);
        e
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(self.body)).into_response()
    }
}

impl From<PipelineError> for ApiError {
    fn from(e: PipelineError) -> Self {
        match &e {
            PipelineError::NoCryDetected | PipelineError::TooShort { .. } => {
                ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, "no_cry_detected", e.to_string())
            }
            PipelineError::Audio(_) => ApiError::new(StatusCode::BAD_REQUEST, "malformed_wav", e.to_string()),
            _ => ApiError::internal(e),
        }
    }
}

async fn health(State(state): State<Arc<AppState>>) -> Json<Value> {
    Json(json!({"status": "ok", "model_digest": state.diagnoser.model_digest()}))
}

async fn model(State(state): State<Arc<AppState>>) -> Json<Value> {
    Json(state.model_summary())
}

async fn read_audio(req: Request) -> Result<Bytes, ApiError> {
    let is_multipart = req
        .headers()
        .get(header::CONTENT_TYPE)
        .and_then(|v| v.to_str().ok())
        .is_some_and(|v| v.starts_with("multipart/form-data"));
    if !is_multipart {
        return axum::body::to_bytes(req.into_body(), MAX_BODY_BYTES)
            .await
            .map_err(|_| ApiError::too_large());
    }
    let mut form = Multipart::from_request(req, &())
        .await
        .map_err(|e| ApiError::new(StatusCode::BAD_REQUEST, "malformed_request", e.body_text()))?;
    loop {
        let field = form.next_field().await.map_err(|e| {
            if e.status() == StatusCode::PAYLOAD_TOO_LARGE {
                ApiError::too_large()
            } else {
                ApiError::new(StatusCode::BAD_REQUEST, "malformed_request", e.body_text())
            }
        })?;
        let Some(field) = field else {
            return Err(ApiError::new(
                StatusCode::BAD_REQUEST,
                "malformed_request",
                "multipart body has no `audio` field",
            ));
        };
        if field.name() == Some("audio") {
            return field.bytes().await.map_err(|e| {
                if e.status() == StatusCode::PAYLOAD_TOO_LARGE {
                    ApiError::too_large()
                } else {
                    ApiError::new(StatusCode::BAD_REQUEST, "malformed_request", e.body_text())
                }
            });
        }
    }
}

/// Decodes and diagnoses WAV bytes; shared by the service and the CLI.
pub fn diagnose_bytes(diagnoser: &Diagnoser, bytes: &[u8]) -> Result<DiagnoseResponse, PipelineError> {
    let rate = diagnoser.config().feature.sample_rate_hz;
    let buf = audio::decode_wav(bytes, rate).map_err(|e: AudioError| PipelineError::Audio(e))?;
    let d = diagnoser.diagnose(&buf)?;
    Ok(DiagnoseResponse::from(&d))
}

async fn diagnose(State(state): State<Arc<AppState>>, req: Request) -> Result<Json<DiagnoseResponse>, ApiError> {
    if req
        .headers()
        .get(header::CONTENT_LENGTH)
        .and_then(|v| v.to_str().ok()?.parse::<usize>().ok())
        .is_some_and(|n| n > MAX_BODY_BYTES)
    {
        return Err(ApiError::too_large());
    }
    let bytes = read_audio(req).await?;
    let worker = state.clone();
    let result = tokio::task::spawn_blocking(move || diagnose_bytes(&worker.diagnoser, &bytes))
        .await
        .map_err(ApiError::internal)?;
    Ok(Json(result?))
}

async fn log_request(req: Request<Body>, next: Next) -> Response {
    let started = Instant::now();
    let path = req.uri().path().to_owned();
    let method = req.method().clone();
    let resp = next.run(req).await;
    tracing::info!(
        %method,
        %path,
        status = resp.status().as_u16(),
        elapsed_ms = started.elapsed().as_millis() as u64,
        "request"
    );
    resp
}

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/v1/health", get(health))
        .route("/v1/model", get(model))
        .route("/v1/diagnose", post(diagnose))
        .layer(DefaultBodyLimit::max(MAX_BODY_BYTES))
        .layer(middleware::from_fn(log_request))
        .with_state(state)
}

/// Serves until the process receives Ctrl-C.
pub async fn serve(listener: TcpListener, state: Arc<AppState>) -> std::io::Result<()> {
    axum::serve(listener, router(state))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}
