use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use schemaforge_core::session::{PromptError, SessionError};
use serde_json::{json, Value};

use crate::store::StoreError;

/// Error responses carry `{"status":"error","code","error","message"}` and,
/// for validation failures, the module's report.
#[derive(Debug)]
pub struct ApiError {
    pub status: StatusCode,
    pub error: &'static str,
    pub message: String,
    pub report: Option<Value>,
}

impl ApiError {
    pub fn new(status: StatusCode, error: &'static str, message: impl Into<String>) -> Self {
        ApiError {
            status,
            error,
            message: message.into(),
            report: None,
        }
    }

    pub fn unprocessable(error: &'static str, message: impl Into<String>) -> Self {
        Self::new(StatusCode::UNPROCESSABLE_ENTITY, error, message)
    }

    pub fn with_report(mut self, report: impl serde::Serialize) -> Self {
        self.report = serde_json::to_value(report).ok();
        self
    }

    pub fn not_found(what: impl Into<String>) -> Self {
        Self::new(StatusCode::NOT_FOUND, "not_found", what)
    }

    pub fn internal(message: impl Into<String>) -> Self {
        Self::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", message)
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let mut body = json!({
            "status": "error",
            "code": self.status.as_u16(),
            "error": self.error,
            "message": self.message,
        });
        if let Some(r) = self.report {
            body["report"] = r;
        }
        (self.status, Json(body)).into_response()
    }
}

impl From<StoreError> for ApiError {
    fn from(e: StoreError) -> Self {
        match e {
            StoreError::NotFound(_) => ApiError::not_found(e.to_string()),
            other => {
                tracing::error!(error = %other, "project store failure");
                ApiError::internal(other.to_string())
            }
        }
    }
}

impl From<SessionError> for ApiError {
    fn from(e: SessionError) -> Self {
        let message = e.to_string();
        match e {
            SessionError::IllegalTransition { .. } => {
                ApiError::new(StatusCode::CONFLICT, "illegal_transition", message)
            }
            SessionError::Blocked => ApiError::new(StatusCode::CONFLICT, "apply_blocked", message),
            SessionError::NotApplicable(_) => {
                ApiError::new(StatusCode::CONFLICT, "not_applicable", message)
            }
            SessionError::Gateway(_) => ApiError::new(StatusCode::BAD_GATEWAY, "gateway", message),
            SessionError::Evaluation(_) | SessionError::NoOutput => {
                ApiError::unprocessable("evaluation", message)
            }
            SessionError::KindMismatch { .. }
            | SessionError::MissingTarget(_)
            | SessionError::Merge(_)
            | SessionError::Proposal(_) => ApiError::unprocessable("session", message),
        }
    }
}

impl From<PromptError> for ApiError {
    fn from(e: PromptError) -> Self {
        ApiError::unprocessable("prompt", e.to_string())
    }
}
