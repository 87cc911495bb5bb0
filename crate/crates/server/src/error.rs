use axum::extract::rejection::{JsonRejection, QueryRejection};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use coos_core::behavior::BehaviorError;
use coos_core::consensus::{ConsensusError, SessionError};
use coos_core::impact::{EditRejected, ImpactError};
use coos_core::mediator::MediatorError;
use coos_core::policy::{PolicyError, TernaryError};
use coos_core::project::ProjectError;
use coos_core::store::StoreError;
use coos_core::svo::SvoError;
use serde::{Deserialize, Serialize};
use serde_json::Value;

/// Body of every error response.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorBody {
    pub code: String,
    pub message: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub details: Option<Value>,
}

#[derive(Debug)]
pub struct ApiError {
    pub status: StatusCode,
    pub body: ErrorBody,
}

impl ApiError {
    pub fn new(status: StatusCode, code: &str, message: impl Into<String>) -> Self {
        Self { status, body: ErrorBody { code: code.into(), message: message.into(), details: None } }
    }

    pub fn with_details(mut self, details: impl Serialize) -> Self {
        self.body.details = serde_json::to_value(details).ok();
        self
    }

    pub fn bad_request(message: impl Into<String>) -> Self {
        Self::new(StatusCode::BAD_REQUEST, "BadRequest", message)
    }

    pub fn unauthorized(message: impl Into<String>) -> Self {
        Self::new(StatusCode::UNAUTHORIZED, "Unauthorized", message)
    }

    pub fn forbidden(message: impl Into<String>) -> Self {
        Self::new(StatusCode::FORBIDDEN, "Forbidden", message)
    }

    pub fn not_found(message: impl Into<String>) -> Self {
        Self::new(StatusCode::NOT_FOUND, "NotFound", message)
    }

    pub fn conflict(code: &str, message: impl Into<String>) -> Self {
        Self::new(StatusCode::CONFLICT, code, message)
    }

    pub fn internal(message: impl Into<String>) -> Self {
        Self::new(StatusCode::INTERNAL_SERVER_ERROR, "Internal", message)
    }

    fn recode(mut self, code: &str) -> Self {
        self.body.code = code.into();
        self
    }

    fn unprocessable(code: &str, message: impl Into<String>) -> Self {
        Self::new(StatusCode::UNPROCESSABLE_ENTITY, code, message)
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        if self.status.is_server_error() {
            tracing::error!(code = %self.body.code, "{}", self.body.message);
        }
        (self.status, Json(self.body)).into_response()
    }
}

impl From<JsonRejection> for ApiError {
    fn from(e: JsonRejection) -> Self {
        ApiError::bad_request(e.body_text())
    }
}

impl From<QueryRejection> for ApiError {
    fn from(e: QueryRejection) -> Self {
        ApiError::bad_request(e.body_text())
    }
}

impl From<ProjectError> for ApiError {
    fn from(e: ProjectError) -> Self {
        match &e {
            ProjectError::UnsupportedSchema { .. } => ApiError::bad_request(e.to_string()).recode("UnsupportedSchema"),
            ProjectError::ValidationFailure(issues) => ApiError::bad_request(e.to_string())
                .recode("ValidationFailure")
                .with_details(issues),
            ProjectError::Io(_) => ApiError::internal(e.to_string()),
        }
    }
}

impl From<SessionError> for ApiError {
    fn from(e: SessionError) -> Self {
        match &e {
            SessionError::IllegalTransition { phase, event } => ApiError::conflict("IllegalTransition", e.to_string())
                .with_details(serde_json::json!({ "phase": phase, "event": event })),
            SessionError::Invalid(_) => ApiError::unprocessable("InvalidEvent", e.to_string()),
            SessionError::Analysis(inner) => inner.clone().into(),
        }
    }
}

impl From<StoreError> for ApiError {
    fn from(e: StoreError) -> Self {
        match e {
            StoreError::ProjectNotFound(_) | StoreError::SessionNotFound(_) => ApiError::not_found(e.to_string()),
            StoreError::AlreadyExists(_) => ApiError::conflict("AlreadyExists", e.to_string()),
            StoreError::InvalidId(_) => ApiError::bad_request(e.to_string()).recode("InvalidId"),
            StoreError::Project(p) => p.into(),
            StoreError::Session(s) => s.into(),
            StoreError::CorruptLog { .. } | StoreError::Io(_) => ApiError::internal(e.to_string()),
        }
    }
}

impl From<EditRejected> for ApiError {
    fn from(e: EditRejected) -> Self {
        ApiError::unprocessable("EditRejected", e.to_string()).with_details(&e.0)
    }
}

macro_rules! domain_error {
    ($ty:ty, $code:expr) => {
        impl From<$ty> for ApiError {
            fn from(e: $ty) -> Self {
                ApiError::unprocessable($code, e.to_string())
            }
        }
    };
    ($ty:ty, $code:expr, details) => {
        impl From<$ty> for ApiError {
            fn from(e: $ty) -> Self {
                ApiError::unprocessable($code, e.to_string()).with_details(&e)
            }
        }
    };
}

domain_error!(ImpactError, "ImpactError");
domain_error!(PolicyError, "PolicyError");
domain_error!(TernaryError, "TernaryError", details);
domain_error!(ConsensusError, "ConsensusError", details);
domain_error!(BehaviorError, "BehaviorError", details);
domain_error!(MediatorError, "MediatorError", details);

impl From<SvoError> for ApiError {
    fn from(e: SvoError) -> Self {
        match e {
            SvoError::ConsentMissing => ApiError::conflict("ConsentMissing", e.to_string()),
            SvoError::WrongStage { .. } => ApiError::conflict("WrongStage", e.to_string()).with_details(&e),
            _ => ApiError::unprocessable("SvoError", e.to_string()).with_details(&e),
        }
    }
}

pub type ApiResult<T> = Result<T, ApiError>;
