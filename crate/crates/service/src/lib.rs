//! HTTP front end for CAJA sessions.
//!
//! | method | path                    | body           | reply                     |
//! |--------|-------------------------|----------------|---------------------------|
//! | POST   | `/sessions`             | game config    | 201 handle + first object |
//! | POST   | `/sessions/{id}/action` | action request | 200 step response         |
//! | GET    | `/sessions/{id}/summary`|                | 200 summary               |
//! | GET    | `/sessions/{id}/trace`  |                | 200 JSON lines            |
//!
//! Responses never carry the error boundary or the seed; the only signal
//! about where the AI errs is the per-cycle correctness feedback.

pub mod api;
pub mod store;

use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{Path, State};
use axum::http::{header, StatusCode};
use axum::response::IntoResponse;
use axum::routing::{get, post};
use axum::{Json, Router};
use backcompat_caja::{now_ms, GameConfig, GameSession};
use tower_http::cors::CorsLayer;

pub use api::{ActionRequest, ApiError, CreateResponse, SessionHandle, Status, StepResponse, Summary};
pub use store::{replay_log, LogEvent, Replayed, SessionEntry, Store, StoreError};

#[derive(Clone)]
pub struct AppState {
    store: Arc<Store>,
    /// Base config that request bodies override field by field.
    defaults: Arc<serde_json::Value>,
}

impl AppState {
    pub fn new(store: Store, defaults: GameConfig) -> Self {
        Self {
            store: Arc::new(store),
            defaults: Arc::new(serde_json::to_value(defaults).expect("config serializes")),
        }
    }

    pub fn store(&self) -> &Store {
        &self.store
    }
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/sessions", post(create_session))
        .route("/sessions/{id}/action", post(submit_action))
        .route("/sessions/{id}/summary", get(get_summary))
        .route("/sessions/{id}/trace", get(get_trace))
        .layer(CorsLayer::permissive())
        .with_state(state)
}

fn status(session: &GameSession) -> Status {
    if session.is_finished() {
        Status::Finished
    } else {
        Status::Active
    }
}

/// Response for answered cycle `cycle`, rebuilt from the trace so that
/// repeats are byte-identical to the original reply.
fn step_response(session: &GameSession, cycle: usize) -> StepResponse {
    let record = &session.trace()[cycle - 1];
    let finished = cycle == session.total_cycles();
    StepResponse {
        cycle,
        reward: Some(record.reward),
        ai_was_correct: Some(record.ai_correct),
        score: record.score_after,
        next_object: session.stream().objects.get(cycle).map(|o| o.view()),
        finished,
        final_score: finished.then_some(record.score_after),
    }
}

fn merge(defaults: &serde_json::Value, body: &[u8]) -> Result<serde_json::Value, ApiError> {
    let mut merged = defaults.clone();
    if body.iter().all(u8::is_ascii_whitespace) {
        return Ok(merged);
    }
    let overrides: serde_json::Value =
        serde_json::from_slice(body).map_err(|e| ApiError::bad_request(format!("malformed JSON: {e}")))?;
    let serde_json::Value::Object(fields) = overrides else {
        return Err(ApiError::bad_request("config must be a JSON object"));
    };
    let target = merged.as_object_mut().expect("config is an object");
    for (k, v) in fields {
        target.insert(k, v);
    }
    Ok(merged)
}

async fn create_session(State(state): State<AppState>, body: Bytes) -> Result<impl IntoResponse, ApiError> {
    let merged = merge(&state.defaults, &body)?;
    let config: GameConfig =
        serde_json::from_value(merged).map_err(|e| ApiError::bad_request(format!("invalid config: {e}")))?;
    let fields = config.field_errors();
    if !fields.is_empty() {
        return Err(ApiError::invalid_config(fields));
    }
    let session = GameSession::new(config).map_err(|e| ApiError::bad_request(e.to_string()))?;
    let id = uuid::Uuid::new_v4().simple().to_string();
    let entry = state
        .store
        .create(id, now_ms(), session)
        .map_err(|e| ApiError::internal(e.to_string()))?;
    let entry = entry.lock().expect("session lock");
    let session = &entry.session;
    let response = CreateResponse {
        session: SessionHandle {
            session_id: entry.id.clone(),
            created_at: entry.created_at,
            status: status(session),
            total_cycles: session.total_cycles(),
            config: api::public_config(session.config()),
        },
        step: StepResponse {
            cycle: 0,
            reward: None,
            ai_was_correct: None,
            score: session.score(),
            next_object: session.current(),
            finished: session.is_finished(),
            final_score: None,
        },
    };
    Ok((StatusCode::CREATED, Json(response)))
}

async fn submit_action(
    State(state): State<AppState>,
    Path(id): Path<String>,
    body: Bytes,
) -> Result<Json<StepResponse>, ApiError> {
    let request: ActionRequest =
        serde_json::from_slice(&body).map_err(|e| ApiError::bad_request(format!("malformed action: {e}")))?;
    let entry = state.store.get(&id).ok_or_else(|| ApiError::not_found(&id))?;
    let mut entry = entry.lock().expect("session lock");
    let cursor = entry.session.cursor();
    let total = entry.session.total_cycles();
    let cycle = request.cycle.unwrap_or(cursor + 1);

    if cycle >= 1 && cycle <= cursor {
        let played = entry.session.trace()[cycle - 1].action;
        return if played == request.action {
            Ok(Json(step_response(&entry.session, cycle)))
        } else {
            Err(ApiError::conflict(format!("cycle {cycle} was already answered with `{played}`")))
        };
    }
    if cursor >= total {
        return Err(ApiError::conflict(format!("session finished after {total} cycles")));
    }
    if cycle != cursor + 1 {
        return Err(ApiError::conflict(format!("cycle {cycle} is not next; next is {}", cursor + 1)));
    }

    let timestamp_ms = now_ms();
    entry
        .append(&LogEvent::Action {
            cycle,
            action: request.action,
            timestamp_ms,
        })
        .map_err(|e| ApiError::internal(e.to_string()))?;
    entry
        .session
        .step_at(request.action, timestamp_ms)
        .map_err(|e| ApiError::internal(e.to_string()))?;
    Ok(Json(step_response(&entry.session, cycle)))
}

async fn get_summary(State(state): State<AppState>, Path(id): Path<String>) -> Result<Json<Summary>, ApiError> {
    let entry = state.store.get(&id).ok_or_else(|| ApiError::not_found(&id))?;
    let entry = entry.lock().expect("session lock");
    let session = &entry.session;
    let (pre, post) = session.phase_scores();
    Ok(Json(Summary {
        session_id: entry.id.clone(),
        status: status(session),
        cycle: session.cursor(),
        total_cycles: session.total_cycles(),
        score: session.score(),
        pre_update_score: pre,
        post_update_score: post,
        action_counts: session.action_counts(),
        trace_url: format!("/sessions/{}/trace", entry.id),
    }))
}

async fn get_trace(State(state): State<AppState>, Path(id): Path<String>) -> Result<impl IntoResponse, ApiError> {
    let entry = state.store.get(&id).ok_or_else(|| ApiError::not_found(&id))?;
    let body = entry.lock().expect("session lock").session.trace_jsonl();
    Ok(([(header::CONTENT_TYPE, "application/x-ndjson")], body))
}

/// Where and how to run the service.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ServiceConfig {
    pub listen: SocketAddr,
    pub data_dir: PathBuf,
    pub default_config: Option<PathBuf>,
}

#[derive(Debug, thiserror::Error)]
pub enum ServeError {
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error("default config {path}: {message}")]
    DefaultConfig { path: PathBuf, message: String },
    #[error("cannot listen on {addr}: {source}")]
    Bind { addr: SocketAddr, source: std::io::Error },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub fn load_default_config(path: Option<&std::path::Path>) -> Result<GameConfig, ServeError> {
    let Some(path) = path else {
        return Ok(GameConfig::default());
    };
    let fail = |message: String| ServeError::DefaultConfig {
        path: path.to_path_buf(),
        message,
    };
    let text = std::fs::read_to_string(path).map_err(|e| fail(e.to_string()))?;
    let config: GameConfig = serde_json::from_str(&text).map_err(|e| fail(e.to_string()))?;
    config.validate().map_err(|e| fail(e.to_string()))?;
    Ok(config)
}

/// Serve until interrupted.
pub async fn serve(config: ServiceConfig) -> Result<(), ServeError> {
    let defaults = load_default_config(config.default_config.as_deref())?;
    let store = Store::open(&config.data_dir)?;
    let listener = tokio::net::TcpListener::bind(config.listen)
        .await
        .map_err(|source| ServeError::Bind {
            addr: config.listen,
            source,
        })?;
    eprintln!(
        "serving {} sessions from {} on http://{}",
        store.len(),
        config.data_dir.display(),
        listener.local_addr()?
    );
    axum::serve(listener, router(AppState::new(store, defaults)))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await?;
    Ok(())
}
