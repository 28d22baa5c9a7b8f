use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::rejection::BytesRejection;
use axum::extract::ws::{Message, WebSocket, WebSocketUpgrade};
use axum::extract::{DefaultBodyLimit, Path, Query, State};
use axum::http::{header, StatusCode};
use axum::response::{Html, IntoResponse, Response};
use axum::routing::{get, patch, post};
use axum::{Json, Router};
use p6_core::frame::DataFrame;
use serde::Deserialize;
use serde_json::{json, Value};
use tokio::sync::broadcast;
use tower_http::services::ServeDir;

use crate::{ApiError, AppState, Upstream};

const INDEX: &str = include_str!("../static/index.html");

pub fn router(state: Arc<AppState>) -> Router {
    let limit = state.config.max_upload_bytes;
    let api = Router::new()
        .route("/api/pipelines", post(create).get(list))
        .route("/api/pipelines/{id}", get(describe).delete(remove))
        .route("/api/pipelines/{id}/scenes", get(scenes))
        .route("/api/pipelines/{id}/params", patch(patch_param))
        .route("/api/pipelines/{id}/catalog", get(catalog))
        .route("/api/pipelines/{id}/frame", get(frame))
        .route("/api/pipelines/{id}/views/{key}/frame", get(view_frame))
        .route("/api/pipelines/{id}/results/{name}", get(result))
        .route("/api/pipelines/{id}/events", get(events))
        .route("/api/uploads", post(upload))
        .route("/", get(|| async { Html(INDEX) }))
        .layer(DefaultBodyLimit::max(limit));
    let api = match &state.config.static_dir {
        Some(dir) => api.fallback_service(ServeDir::new(dir)),
        None => api,
    };
    api.with_state(state)
}

fn body(limit: usize, body: Result<Bytes, BytesRejection>) -> Result<Bytes, ApiError> {
    body.map_err(|r| match r.status() {
        StatusCode::PAYLOAD_TOO_LARGE => ApiError::too_large(limit),
        status => ApiError::new(status, "bad_body", r.body_text()),
    })
}

/// Runs CPU-bound engine work off the async workers.
async fn blocking<T: Send + 'static>(f: impl FnOnce() -> Result<T, ApiError> + Send + 'static) -> Result<T, ApiError> {
    tokio::task::spawn_blocking(f)
        .await
        .unwrap_or_else(|e| Err(ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "panic", e.to_string())))
}

#[derive(Deserialize)]
struct CreateQuery {
    upstream: Option<String>,
    export: Option<String>,
}

async fn create(
    State(state): State<Arc<AppState>>,
    Query(q): Query<CreateQuery>,
    raw: Result<Bytes, BytesRejection>,
) -> Result<Response, ApiError> {
    let raw = body(state.config.max_upload_bytes, raw)?;
    let text = String::from_utf8(raw.to_vec())
        .map_err(|_| ApiError::new(StatusCode::BAD_REQUEST, "bad_body", "spec is not UTF-8"))?;
    let upstream = q.upstream.map(|pipeline| Upstream { pipeline, export: q.export });
    let (id, report) = blocking(move || state.create(&text, None, upstream.as_ref())).await?;
    tracing::info!(pipeline = %id, executed = report.executed.len(), "pipeline created");
    Ok((StatusCode::CREATED, Json(json!({"pipeline_id": id, "run": report}))).into_response())
}

async fn list(State(state): State<Arc<AppState>>) -> Json<Value> {
    Json(Value::Array(state.sessions().iter().map(|s| state.summary(s)).collect()))
}

async fn describe(State(state): State<Arc<AppState>>, Path(id): Path<String>) -> Result<Json<Value>, ApiError> {
    let session = state.session(&id)?;
    let mut out = state.summary(&session);
    session.with_engine(|e| {
        out["spec"] = p6_core::spec::pipeline_to_value(e.spec());
        out["graph"] = p6_core::engine::describe(e);
    });
    Ok(Json(out))
}

async fn remove(State(state): State<Arc<AppState>>, Path(id): Path<String>) -> Result<StatusCode, ApiError> {
    if state.remove(&id) {
        Ok(StatusCode::NO_CONTENT)
    } else {
        Err(ApiError::not_found(format!("no pipeline `{id}`")))
    }
}

async fn scenes(State(state): State<Arc<AppState>>, Path(id): Path<String>) -> Result<Response, ApiError> {
    let snap = state.session(&id)?.snapshot();
    Ok(([(header::CONTENT_TYPE, "application/json")], snap.scenes.as_ref().clone()).into_response())
}

#[derive(Deserialize)]
struct PatchBody {
    path: String,
    value: Value,
}

async fn patch_param(
    State(state): State<Arc<AppState>>,
    Path(id): Path<String>,
    Json(edit): Json<PatchBody>,
) -> Result<Json<Value>, ApiError> {
    let session = state.session(&id)?;
    let report = blocking(move || session.patch(&edit.path, &edit.value).map_err(ApiError::from)).await?;
    Ok(Json(serde_json::to_value(report).expect("report serializes")))
}

async fn catalog(State(state): State<Arc<AppState>>, Path(id): Path<String>) -> Result<Json<Value>, ApiError> {
    let entries = state.session(&id)?.with_engine(|e| e.catalog());
    Ok(Json(serde_json::to_value(entries).expect("catalog serializes")))
}

#[derive(Deserialize)]
struct Columns {
    columns: Option<String>,
}

fn binary(frame: &DataFrame, columns: Option<&str>) -> Result<Response, ApiError> {
    let bytes = match columns.filter(|c| !c.is_empty()) {
        None => frame.encode(),
        Some(list) => frame.project(&list.split(',').collect::<Vec<_>>())?.encode(),
    };
    Ok(([(header::CONTENT_TYPE, "application/octet-stream")], bytes).into_response())
}

async fn frame(
    State(state): State<Arc<AppState>>,
    Path(id): Path<String>,
    Query(q): Query<Columns>,
) -> Result<Response, ApiError> {
    let snap = state.session(&id)?.snapshot();
    binary(&snap.frame, q.columns.as_deref())
}

async fn view_frame(
    State(state): State<Arc<AppState>>,
    Path((id, key)): Path<(String, String)>,
    Query(q): Query<Columns>,
) -> Result<Response, ApiError> {
    let snap = state.session(&id)?.snapshot();
    let frame = snap
        .views
        .get(&key)
        .ok_or_else(|| ApiError::not_found(format!("no view data `{key}`")))?;
    binary(frame, q.columns.as_deref())
}

async fn result(
    State(state): State<Arc<AppState>>,
    Path((id, name)): Path<(String, String)>,
) -> Result<Json<Value>, ApiError> {
    let session = state.session(&id)?;
    Ok(Json(session.with_engine(|e| e.export_result(&name))?))
}

async fn upload(State(state): State<Arc<AppState>>, raw: Result<Bytes, BytesRejection>) -> Result<Response, ApiError> {
    let raw = body(state.config.max_upload_bytes, raw)?;
    let token = state.upload(raw.to_vec());
    Ok((StatusCode::CREATED, Json(json!({"token": token, "bytes": raw.len()}))).into_response())
}

async fn events(
    State(state): State<Arc<AppState>>,
    Path(id): Path<String>,
    ws: WebSocketUpgrade,
) -> Result<Response, ApiError> {
    // Subscribe before the upgrade so no event published after this request
    // is missed.
    let rx = state.session(&id)?.subscribe();
    Ok(ws.on_upgrade(move |socket| forward(socket, rx)))
}

async fn forward(mut socket: WebSocket, mut rx: broadcast::Receiver<Arc<str>>) {
    loop {
        tokio::select! {
            event = rx.recv() => match event {
                Ok(text) => {
                    if socket.send(Message::Text(text.as_ref().into())).await.is_err() {
                        return;
                    }
                }
                // A subscriber that fell behind would see a gap; close so the
                // client refetches instead.
                Err(_) => {
                    let _ = socket.send(Message::Close(None)).await;
                    return;
                }
            },
            incoming = socket.recv() => match incoming {
                Some(Ok(Message::Close(_))) | None | Some(Err(_)) => return,
                Some(Ok(_)) => {}
            },
        }
    }
}
