use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use serde_json::json;
use topiary_core::discussions::DiscussionError;
use topiary_core::refactor::PlanError;
use topiary_core::tags::TagError;
use topiary_core::{AuthzError, LogError, ProjectError};

/// JSON error body `{"error": kind, "message": text}` with a status code.
#[derive(Debug)]
pub struct ApiError {
    pub status: StatusCode,
    pub kind: &'static str,
    pub message: String,
}

impl ApiError {
    pub fn new(status: StatusCode, kind: &'static str, message: impl Into<String>) -> Self {
        ApiError { status, kind, message: message.into() }
    }

    pub fn bad_request(message: impl Into<String>) -> Self {
        ApiError::new(StatusCode::BAD_REQUEST, "BadRequest", message)
    }

    pub fn unauthorized() -> Self {
        ApiError::new(StatusCode::UNAUTHORIZED, "Unauthenticated", "missing or invalid bearer token")
    }

    pub fn not_found(what: impl Into<String>) -> Self {
        ApiError::new(StatusCode::NOT_FOUND, "NotFound", what)
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(json!({ "error": self.kind, "message": self.message }))).into_response()
    }
}

fn authz(e: &AuthzError) -> (StatusCode, &'static str) {
    match e {
        AuthzError::PermissionDenied { .. } => (StatusCode::FORBIDDEN, "PermissionDenied"),
        AuthzError::CannotDemoteOwner => (StatusCode::CONFLICT, "CannotDemoteOwner"),
    }
}

impl From<ProjectError> for ApiError {
    fn from(e: ProjectError) -> Self {
        use StatusCode as S;
        let (status, kind) = match &e {
            ProjectError::Authz(a) => authz(a),
            ProjectError::Discussion(DiscussionError::PermissionDenied(a)) => authz(a),
            ProjectError::Log(l) => match l {
                LogError::EmptyChangeSet => (S::BAD_REQUEST, "EmptyChangeSet"),
                LogError::ValidationFailed { .. } => (S::CONFLICT, "ValidationFailed"),
                LogError::UnknownRevision(_) => (S::NOT_FOUND, "UnknownRevision"),
                LogError::InverseNotApplicable { .. } => (S::CONFLICT, "InverseNotApplicable"),
                LogError::Corrupt { .. } | LogError::Io(_) => (S::INTERNAL_SERVER_ERROR, "Storage"),
            },
            ProjectError::Plan(PlanError::UnknownEntity(_)) | ProjectError::UnknownEntity(_) => (S::NOT_FOUND, "UnknownEntity"),
            ProjectError::Plan(PlanError::InvalidPattern(_) | PlanError::InvalidTemplate(_) | PlanError::EmptySelection) => {
                (S::BAD_REQUEST, "InvalidRequest")
            }
            ProjectError::Plan(_) => (S::UNPROCESSABLE_ENTITY, "PlanRejected"),
            ProjectError::Tag(t) => match t {
                TagError::UnknownTag(_) => (S::NOT_FOUND, "UnknownTag"),
                TagError::UnknownEntity(_) => (S::NOT_FOUND, "UnknownEntity"),
                TagError::AlreadyAssigned { .. } | TagError::NotAssigned { .. } | TagError::DuplicateLabel(_) => (S::CONFLICT, "TagConflict"),
                TagError::InvalidColor(_) | TagError::InvalidCriteria(_) => (S::BAD_REQUEST, "InvalidTag"),
            },
            ProjectError::Discussion(d) => match d {
                DiscussionError::UnknownEntity(_) => (S::NOT_FOUND, "UnknownEntity"),
                DiscussionError::UnknownThread(_) => (S::NOT_FOUND, "UnknownThread"),
                DiscussionError::EmptyBody => (S::BAD_REQUEST, "EmptyBody"),
                DiscussionError::EntityMismatch { .. } => (S::CONFLICT, "EntityMismatch"),
                DiscussionError::PermissionDenied(_) => unreachable!("matched above"),
            },
            ProjectError::Lang(_) => (S::BAD_REQUEST, "InvalidLanguages"),
            ProjectError::Search(_) => (S::BAD_REQUEST, "InvalidQuery"),
            ProjectError::Export(_) | ProjectError::Stats(_) => (S::CONFLICT, "InvalidTree"),
            ProjectError::Seed(_) => (S::BAD_REQUEST, "InvalidSeed"),
            ProjectError::SeqTooOld(_) => (S::GONE, "SeqTooOld"),
            ProjectError::NothingToDo => (S::UNPROCESSABLE_ENTITY, "NothingToDo"),
            ProjectError::InvalidSettings(_) => (S::BAD_REQUEST, "InvalidSettings"),
            ProjectError::Storage(_) => (S::INTERNAL_SERVER_ERROR, "Storage"),
        };
        ApiError::new(status, kind, e.to_string())
    }
}
