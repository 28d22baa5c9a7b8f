use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use p6_core::engine::EngineError;
use p6_core::frame::FrameError;
use p6_core::spec::ValidationReport;
use serde_json::{json, Value};

/// An error with its HTTP status and JSON body.
#[derive(Debug, Clone, PartialEq)]
pub struct ApiError {
    pub status: StatusCode,
    pub body: Value,
}

impl ApiError {
    pub fn new(status: StatusCode, kind: &str, message: impl Into<String>) -> Self {
        Self {
            status,
            body: json!({"error": kind, "message": message.into()}),
        }
    }

    pub fn not_found(what: impl Into<String>) -> Self {
        Self::new(StatusCode::NOT_FOUND, "not_found", what)
    }

    pub fn too_large(limit: usize) -> Self {
        Self::new(
            StatusCode::PAYLOAD_TOO_LARGE,
            "too_large",
            format!("body exceeds the {limit}-byte limit"),
        )
    }

    fn validation(report: &ValidationReport) -> Self {
        let message = report.findings.first().map(|f| f.message.clone()).unwrap_or_default();
        Self {
            status: StatusCode::BAD_REQUEST,
            body: json!({"error": "validation", "message": message, "findings": report.findings}),
        }
    }
}

impl From<EngineError> for ApiError {
    fn from(e: EngineError) -> Self {
        let message = e.to_string();
        match e {
            EngineError::Spec(s) => Self::validation(&ValidationReport::from_parse_error(&s)),
            EngineError::Invalid(report) => Self::validation(&report),
            EngineError::CycleDetected { cycle } => Self {
                status: StatusCode::BAD_REQUEST,
                body: json!({"error": "cycle", "message": message, "cycle": cycle}),
            },
            EngineError::Node { node, path, .. } => Self {
                status: StatusCode::UNPROCESSABLE_ENTITY,
                body: json!({"error": "execution", "message": message, "node": node, "path": path}),
            },
            EngineError::UnknownPath(path) => Self {
                status: StatusCode::BAD_REQUEST,
                body: json!({"error": "unknown_path", "message": message, "path": path}),
            },
            EngineError::TypeError { path, .. } => Self {
                status: StatusCode::BAD_REQUEST,
                body: json!({"error": "type_error", "message": message, "path": path}),
            },
            EngineError::NotYetExecuted(_) => Self::new(StatusCode::CONFLICT, "not_executed", message),
            EngineError::UnknownOperation(_) => Self::not_found(message),
            EngineError::ShapeMismatch(_) => Self::new(StatusCode::BAD_REQUEST, "shape_mismatch", message),
        }
    }
}

impl From<FrameError> for ApiError {
    fn from(e: FrameError) -> Self {
        let kind = match e {
            FrameError::UnknownColumn(_) => "unknown_column",
            _ => "frame",
        };
        Self::new(StatusCode::BAD_REQUEST, kind, e.to_string())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(self.body)).into_response()
    }
}
