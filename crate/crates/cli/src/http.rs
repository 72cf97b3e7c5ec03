//! HTTP surface of the decision service.
//!
//! - `POST /v1/decide`  -> 200 decision
//! - `POST /v1/events`  -> 202 acknowledgment
//! - `GET  /v1/stats?group=G4` -> 200 statistics table
//! - `GET  /v1/params` / `POST /v1/params` -> active parameter set

use std::collections::HashMap;
use std::sync::Arc;

use axum::extract::{Query, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::Deserialize;

use sweetspot_core::error::Error as CoreError;
use sweetspot_core::metrics::ExposureEvent;
use sweetspot_core::serving::{DecisionRequest, Engine, ServingParams};
use sweetspot_core::Group;
use sweetspot_core::SaturationReport;

fn error_response(status: StatusCode, message: String) -> Response {
    (status, Json(serde_json::json!({ "error": message }))).into_response()
}

fn map_core_error(err: CoreError) -> Response {
    let message = err.to_string();
    let status = if message.contains("no policy configured") {
        StatusCode::SERVICE_UNAVAILABLE
    } else {
        StatusCode::UNPROCESSABLE_ENTITY
    };
    error_response(status, message)
}

async fn decide(
    State(engine): State<Arc<Engine>>,
    Json(request): Json<DecisionRequest>,
) -> Response {
    match engine.decide(&request) {
        Ok(decision) => (StatusCode::OK, Json(decision)).into_response(),
        Err(e) => map_core_error(e),
    }
}

async fn record_event(
    State(engine): State<Arc<Engine>>,
    Json(event): Json<ExposureEvent>,
) -> Response {
    match engine.record_event(&event) {
        Ok(ack) => (StatusCode::ACCEPTED, Json(ack)).into_response(),
        Err(e) => map_core_error(e),
    }
}

async fn stats(
    State(engine): State<Arc<Engine>>,
    Query(params): Query<HashMap<String, String>>,
) -> Response {
    let group = match params.get("group").map(|g| g.parse::<Group>()) {
        Some(Ok(group)) => group,
        Some(Err(e)) => return error_response(StatusCode::UNPROCESSABLE_ENTITY, e.to_string()),
        None => {
            return error_response(
                StatusCode::UNPROCESSABLE_ENTITY,
                "missing query parameter: group".into(),
            )
        }
    };
    match engine.stats_snapshot(group) {
        Ok(table) => (StatusCode::OK, Json(table)).into_response(),
        Err(e) => map_core_error(e),
    }
}

async fn get_params(State(engine): State<Arc<Engine>>) -> Response {
    (StatusCode::OK, Json(engine.params())).into_response()
}

/// Either a full parameter set or a saturation report to derive the level
/// cap from.
#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum ParamsBody {
    ApplySaturation { apply_saturation: SaturationReport },
    Params(ServingParams),
}

async fn post_params(State(engine): State<Arc<Engine>>, Json(body): Json<ParamsBody>) -> Response {
    let result = match body {
        ParamsBody::Params(params) => engine.update_params(params),
        ParamsBody::ApplySaturation { apply_saturation } => {
            engine.apply_saturation(&apply_saturation)
        }
    };
    match result {
        Ok(()) => (StatusCode::OK, Json(engine.params())).into_response(),
        Err(e) => map_core_error(e),
    }
}

pub fn router(engine: Arc<Engine>) -> Router {
    Router::new()
        .route("/v1/decide", post(decide))
        .route("/v1/events", post(record_event))
        .route("/v1/stats", get(stats))
        .route("/v1/params", get(get_params).post(post_params))
        .with_state(engine)
}

/// Serves until `shutdown` resolves, then flushes the event log.
pub async fn serve(
    engine: Arc<Engine>,
    listener: tokio::net::TcpListener,
    shutdown: impl std::future::Future<Output = ()> + Send + 'static,
) -> std::io::Result<()> {
    let app = router(Arc::clone(&engine));
    axum::serve(listener, app)
        .with_graceful_shutdown(shutdown)
        .await?;
    engine.flush();
    Ok(())
}
