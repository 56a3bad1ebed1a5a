use thiserror::Error;

use crate::domain::{CaseId, ValidationIssue};

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Errors raised while reading a case-bundle file.
#[derive(Debug, Error)]
pub enum BundleError {
    #[error("malformed bundle: {0}")]
    Malformed(String),
    #[error("schema violation at `{path}`: {message}")]
    Schema { path: String, message: String },
    #[error("bundle violates {} invariant(s): {}", .0.len(), join_issues(.0))]
    Invariant(Vec<ValidationIssue>),
}

fn join_issues(issues: &[ValidationIssue]) -> String {
    issues
        .iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join("; ")
}

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Bundle(#[from] BundleError),
    #[error("unknown case `{0}`")]
    UnknownCase(CaseId),
    #[error("case `{0}` already exists")]
    DuplicateCase(CaseId),
    #[error("case id `{0}` must use only letters, digits, `-`, `_` and `.`")]
    InvalidCaseId(CaseId),
    #[error("invalid physician id `{0}`")]
    InvalidPhysicianId(String),
    #[error("case `{0}` has no triage result")]
    MissingTriage(CaseId),
    #[error("case `{0}` has no draft report")]
    MissingDraft(CaseId),
    #[error("case `{0}` already has a review session")]
    SessionExists(CaseId),
    #[error("case `{0}` has no review session")]
    NoSession(CaseId),
    #[error("session for `{case_id}` belongs to physician `{owner}`")]
    NotSessionOwner { case_id: CaseId, owner: String },
    #[error("edit rejected: text changed since it was read")]
    StaleEdit,
    #[error("session is already approved")]
    Approved,
    #[error("unknown section `{0}`")]
    UnknownSection(String),
    #[error("approval blocked: {}", .0.join(", "))]
    PreconditionUnmet(Vec<String>),
    #[error("chart `{0}` does not match any section topic")]
    TopicMismatch(String),
    #[error("chart id `{0}` appears more than once")]
    DuplicateChart(String),
    #[error("generation service unreachable: {0}")]
    ServiceUnreachable(String),
    #[error("generation output rejected: {0}")]
    GenerationFailed(String),
    #[error("audit rule violated: {0}")]
    AuditViolation(String),
    #[error("degenerate input: {0}")]
    DegenerateInput(String),
    #[error("invalid questionnaire responses: {0}")]
    InvalidResponses(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("store corrupted: {0}")]
    Corrupt(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("serialization error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Stable machine-readable error name, used by the CLI and HTTP API.
    pub fn code(&self) -> &'static str {
        match self {
            Error::Bundle(BundleError::Malformed(_)) => "MalformedBundle",
            Error::Bundle(BundleError::Schema { .. }) => "SchemaViolation",
            Error::Bundle(BundleError::Invariant(_)) => "InvariantViolation",
            Error::UnknownCase(_) => "UnknownCase",
            Error::DuplicateCase(_) => "DuplicateCase",
            Error::InvalidCaseId(_) => "InvalidCaseId",
            Error::InvalidPhysicianId(_) => "InvalidPhysicianId",
            Error::MissingTriage(_) => "MissingTriage",
            Error::MissingDraft(_) => "MissingDraft",
            Error::SessionExists(_) => "SessionExists",
            Error::NoSession(_) => "NoSession",
            Error::NotSessionOwner { .. } => "NotSessionOwner",
            Error::StaleEdit => "StaleEdit",
            Error::Approved => "Approved",
            Error::UnknownSection(_) => "UnknownSection",
            Error::PreconditionUnmet(_) => "PreconditionUnmet",
            Error::TopicMismatch(_) => "TopicMismatch",
            Error::DuplicateChart(_) => "DuplicateChart",
            Error::ServiceUnreachable(_) => "ServiceUnreachable",
            Error::GenerationFailed(_) => "GenerationFailed",
            Error::AuditViolation(_) => "AuditViolation",
            Error::DegenerateInput(_) => "DegenerateInput",
            Error::InvalidResponses(_) => "InvalidResponses",
            Error::Config(_) => "ConfigError",
            Error::Corrupt(_) => "StoreCorrupt",
            Error::Io(_) => "IoError",
            Error::Json(_) => "SerializationError",
        }
    }
}
