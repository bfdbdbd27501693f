use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use serde_json::json;

use fmcq_core::diagnosis::DiagnosisError;
use fmcq_core::io::ParseError;
use fmcq_core::model::{AssignmentError, BadAtom};
use fmcq_core::repr::ReprError;

use crate::views::API_VERSION;

/// Error body: `{api_version, error: {kind, message, bad_atoms?}}`.
#[derive(Debug, Clone, PartialEq)]
pub struct ApiError {
    pub status: StatusCode,
    pub kind: &'static str,
    pub message: String,
    pub bad_atoms: Vec<BadAtom>,
}

impl ApiError {
    pub fn new(status: StatusCode, kind: &'static str, message: impl Into<String>) -> Self {
        ApiError {
            status,
            kind,
            message: message.into(),
            bad_atoms: Vec::new(),
        }
    }

    pub fn not_found(what: &str, id: &str) -> Self {
        Self::new(StatusCode::NOT_FOUND, "not_found", format!("unknown {what} {id}"))
    }

    pub fn bad_request(message: impl Into<String>) -> Self {
        Self::new(StatusCode::BAD_REQUEST, "bad_request", message)
    }

    pub fn validation(message: impl Into<String>) -> Self {
        Self::new(StatusCode::UNPROCESSABLE_ENTITY, "validation", message)
    }

    pub fn internal(message: impl Into<String>) -> Self {
        Self::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", message)
    }
}

impl From<AssignmentError> for ApiError {
    fn from(e: AssignmentError) -> Self {
        ApiError {
            bad_atoms: e.bad.clone(),
            ..ApiError::validation(e.to_string())
        }
    }
}

impl From<ParseError> for ApiError {
    fn from(e: ParseError) -> Self {
        ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, "model_parse", e.to_string())
    }
}

impl From<ReprError> for ApiError {
    fn from(e: ReprError) -> Self {
        match e {
            ReprError::TooLarge { .. } => {
                ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, "too_large", e.to_string())
            }
            other => ApiError::internal(other.to_string()),
        }
    }
}

impl From<DiagnosisError> for ApiError {
    fn from(e: DiagnosisError) -> Self {
        match e {
            DiagnosisError::Repr(r) => r.into(),
            DiagnosisError::NoConfigurations => {
                ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, "void_model", e.to_string())
            }
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let mut error = json!({ "kind": self.kind, "message": self.message });
        if !self.bad_atoms.is_empty() {
            error["bad_atoms"] = self
                .bad_atoms
                .iter()
                .map(|b| json!({ "atom": b.atom, "reason": b.reason }))
                .collect();
        }
        (self.status, Json(json!({ "api_version": API_VERSION, "error": error }))).into_response()
    }
}
