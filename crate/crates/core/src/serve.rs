//! JSON-over-HTTP facade.
//!
//! `POST /select` takes `{"bpmn": "<xml>", "config": {...}}` and answers with
//! the same report bytes the `select` command prints. `GET /services` lists
//! the registry and `GET /services/{serviceKey}` returns one service record.
//! The registry is loaded once and never mutated.

use std::net::SocketAddr;
use std::sync::Arc;

use axum::body::Body;
use axum::extract::{Path, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::Router;
use serde::{Deserialize, Serialize};

use crate::config::{AppConfig, ConfigPatch};
use crate::lexicon::SynonymLexicon;
use crate::registry::{ServiceRegistry, WebService};
use crate::report::SelectionReport;

pub struct ServerState {
    pub registry: ServiceRegistry,
    pub lexicon: SynonymLexicon,
    pub config: AppConfig,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct SelectRequest {
    pub bpmn: String,
    #[serde(default)]
    pub config: Option<ConfigPatch>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ServiceSummary {
    pub service_key: String,
    pub name: String,
    pub category: String,
    pub operation_count: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ApiError {
    pub status: StatusCode,
    pub message: String,
}

impl ApiError {
    fn bad_request(message: impl ToString) -> Self {
        Self {
            status: StatusCode::BAD_REQUEST,
            message: message.to_string(),
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let body = serde_json::json!({ "error": self.message });
        json_response(self.status, serde_json::to_string(&body).expect("error body serializes"))
    }
}

fn json_response(status: StatusCode, body: String) -> Response {
    Response::builder()
        .status(status)
        .header(header::CONTENT_TYPE, "application/json")
        .body(Body::from(body))
        .expect("static response parts are valid")
}

/// Runs selection for one request against the shared registry.
pub fn handle_select(state: &ServerState, req: &SelectRequest) -> Result<SelectionReport, ApiError> {
    if req.bpmn.trim().is_empty() {
        return Err(ApiError::bad_request("request field `bpmn` is empty"));
    }
    let config = match &req.config {
        Some(patch) => patch.apply(&state.config).map_err(ApiError::bad_request)?,
        None => state.config.clone(),
    };
    crate::select(&req.bpmn, &state.registry, &state.lexicon, &config.selection)
        .map_err(ApiError::bad_request)
}

pub fn list_services(state: &ServerState) -> Vec<ServiceSummary> {
    state
        .registry
        .services()
        .map(|(cat, svc)| ServiceSummary {
            service_key: svc.service_key.clone(),
            name: svc.name.clone(),
            category: cat.name.clone(),
            operation_count: svc.operations.len(),
        })
        .collect()
}

pub fn find_service<'a>(state: &'a ServerState, key: &str) -> Result<&'a WebService, ApiError> {
    state.registry.service(key).map(|(_, s)| s).ok_or_else(|| ApiError {
        status: StatusCode::NOT_FOUND,
        message: format!("no service with key `{key}`"),
    })
}

async fn select_route(State(state): State<Arc<ServerState>>, body: axum::body::Bytes) -> Response {
    let req: SelectRequest = match serde_json::from_slice(&body) {
        Ok(r) => r,
        Err(e) => return ApiError::bad_request(format!("invalid request body: {e}")).into_response(),
    };
    let result = tokio::task::spawn_blocking(move || handle_select(&state, &req)).await;
    match result {
        Ok(Ok(report)) => json_response(StatusCode::OK, report.to_json()),
        Ok(Err(e)) => e.into_response(),
        Err(join) => ApiError {
            status: StatusCode::INTERNAL_SERVER_ERROR,
            message: join.to_string(),
        }
        .into_response(),
    }
}

async fn list_route(State(state): State<Arc<ServerState>>) -> Response {
    let body = serde_json::to_string_pretty(&list_services(&state)).expect("summaries serialize");
    json_response(StatusCode::OK, body)
}

async fn service_route(State(state): State<Arc<ServerState>>, Path(key): Path<String>) -> Response {
    match find_service(&state, &key) {
        Ok(svc) => json_response(StatusCode::OK, serde_json::to_string_pretty(svc).expect("service serializes")),
        Err(e) => e.into_response(),
    }
}

pub fn router(state: Arc<ServerState>) -> Router {
    Router::new()
        .route("/select", post(select_route))
        .route("/services", get(list_route))
        .route("/services/{key}", get(service_route))
        .with_state(state)
}

pub async fn serve(state: Arc<ServerState>, addr: SocketAddr) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    eprintln!("listening on http://{}", listener.local_addr()?);
    axum::serve(listener, router(state)).await
}
