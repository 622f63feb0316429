//! Wire types and error responses.

use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use backcompat_caja::{Action, ActionCounts, FieldError, GameConfig, Money, ObjectView};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Active,
    Finished,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionHandle {
    pub session_id: String,
    pub created_at: u64,
    pub status: Status,
    pub total_cycles: usize,
    /// The session's config without its seed and boundaries.
    pub config: serde_json::Value,
}

/// Body of `POST /sessions/{id}/action`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ActionRequest {
    pub action: Action,
    /// Cycle being answered. When present, a repeat of an answered cycle with
    /// the same action returns the stored response instead of stepping again.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cycle: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StepResponse {
    /// Cycle just answered; 0 before the first action.
    pub cycle: usize,
    pub reward: Option<Money>,
    pub ai_was_correct: Option<bool>,
    pub score: Money,
    pub next_object: Option<ObjectView>,
    pub finished: bool,
    pub final_score: Option<Money>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CreateResponse {
    #[serde(flatten)]
    pub session: SessionHandle,
    pub step: StepResponse,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Summary {
    pub session_id: String,
    pub status: Status,
    pub cycle: usize,
    pub total_cycles: usize,
    pub score: Money,
    pub pre_update_score: Money,
    pub post_update_score: Money,
    pub action_counts: ActionCounts,
    pub trace_url: String,
}

/// Config as shown to clients: the seed and boundaries would reveal where
/// the AI errs.
pub fn public_config(config: &GameConfig) -> serde_json::Value {
    let mut value = serde_json::to_value(config).expect("config serializes");
    if let Some(map) = value.as_object_mut() {
        for hidden in ["seed", "pre_boundary", "post_boundary"] {
            map.remove(hidden);
        }
    }
    value
}

#[derive(Debug, Serialize)]
struct ErrorBody<'a> {
    error: &'a str,
    #[serde(skip_serializing_if = "<[FieldError]>::is_empty")]
    fields: &'a [FieldError],
}

#[derive(Debug)]
pub struct ApiError {
    pub status: StatusCode,
    pub message: String,
    pub fields: Vec<FieldError>,
}

impl ApiError {
    pub fn new(status: StatusCode, message: impl Into<String>) -> Self {
        Self {
            status,
            message: message.into(),
            fields: Vec::new(),
        }
    }

    pub fn bad_request(message: impl Into<String>) -> Self {
        Self::new(StatusCode::BAD_REQUEST, message)
    }

    pub fn invalid_config(fields: Vec<FieldError>) -> Self {
        Self {
            status: StatusCode::BAD_REQUEST,
            message: "invalid game config".into(),
            fields,
        }
    }

    pub fn not_found(id: &str) -> Self {
        Self::new(StatusCode::NOT_FOUND, format!("no session `{id}`"))
    }

    pub fn conflict(message: impl Into<String>) -> Self {
        Self::new(StatusCode::CONFLICT, message)
    }

    pub fn internal(message: impl Into<String>) -> Self {
        Self::new(StatusCode::INTERNAL_SERVER_ERROR, message)
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let body = ErrorBody {
            error: &self.message,
            fields: &self.fields,
        };
        (self.status, Json(body)).into_response()
    }
}
