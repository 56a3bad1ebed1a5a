//! HTTP front end for the review workflow.
//!
//! Bodies are JSON, like case bundles. Mutating review routes identify the
//! physician with the `X-Physician-Id` header. Errors come back as
//! `{"error": <code>, "message": <text>}`.

use std::net::SocketAddr;
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{Path, State};
use axum::http::{header, HeaderMap, StatusCode};
use axum::response::{Html, IntoResponse, Response};
use axum::routing::{get, patch, post};
use axum::{Json, Router};
use careloop_core::domain::{CaseId, PhysicianId};
use careloop_core::draft::{draft_case, GeneratorConfig, MoveTag};
use careloop_core::generation::ChatBackend;
use careloop_core::ingestion::{parse_case_bundle, CaseStore};
use careloop_core::review::{self, FollowUpInterval};
use careloop_core::triage::{triage_case, TriageConfig, UrgencyEstimator};
use careloop_core::Error;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

pub const PHYSICIAN_HEADER: &str = "x-physician-id";

#[derive(Clone)]
pub struct AppState {
    pub store: Arc<CaseStore>,
    pub triage_config: Arc<TriageConfig>,
    pub generator: Arc<GeneratorConfig>,
    pub backend: Option<Arc<dyn ChatBackend>>,
    pub estimator: Option<Arc<dyn UrgencyEstimator>>,
}

impl AppState {
    /// Rule-only triage and template drafting.
    pub fn new(store: Arc<CaseStore>) -> Self {
        Self {
            store,
            triage_config: Arc::new(TriageConfig::default()),
            generator: Arc::new(GeneratorConfig::default()),
            backend: None,
            estimator: None,
        }
    }
}

/// API error: a stable code, an HTTP status and a message.
#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    code: &'static str,
    message: String,
}

#[derive(Serialize, Deserialize)]
pub struct ErrorBody {
    pub error: String,
    pub message: String,
}

impl ApiError {
    fn new(status: StatusCode, code: &'static str, message: impl Into<String>) -> Self {
        Self {
            status,
            code,
            message: message.into(),
        }
    }
}

pub fn status_for(e: &Error) -> StatusCode {
    match e {
        Error::UnknownCase(_) | Error::NoSession(_) | Error::UnknownSection(_) => StatusCode::NOT_FOUND,
        Error::Bundle(_)
        | Error::InvalidCaseId(_)
        | Error::InvalidPhysicianId(_)
        | Error::DegenerateInput(_)
        | Error::InvalidResponses(_)
        | Error::Config(_) => StatusCode::UNPROCESSABLE_ENTITY,
        Error::NotSessionOwner { .. } => StatusCode::FORBIDDEN,
        Error::DuplicateCase(_)
        | Error::MissingTriage(_)
        | Error::MissingDraft(_)
        | Error::SessionExists(_)
        | Error::StaleEdit
        | Error::Approved
        | Error::PreconditionUnmet(_) => StatusCode::CONFLICT,
        Error::ServiceUnreachable(_) | Error::GenerationFailed(_) => StatusCode::BAD_GATEWAY,
        Error::TopicMismatch(_)
        | Error::DuplicateChart(_)
        | Error::AuditViolation(_)
        | Error::Corrupt(_)
        | Error::Io(_)
        | Error::Json(_) => StatusCode::INTERNAL_SERVER_ERROR,
    }
}

impl From<Error> for ApiError {
    fn from(e: Error) -> Self {
        ApiError::new(status_for(&e), e.code(), e.to_string())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let body = ErrorBody {
            error: self.code.to_string(),
            message: self.message,
        };
        (self.status, Json(body)).into_response()
    }
}

type ApiResult<T> = Result<Json<T>, ApiError>;

/// Run blocking store work off the async executor.
async fn blocking<T, F>(f: F) -> Result<T, ApiError>
where
    T: Send + 'static,
    F: FnOnce() -> careloop_core::Result<T> + Send + 'static,
{
    match tokio::task::spawn_blocking(f).await {
        Ok(r) => r.map_err(ApiError::from),
        Err(e) => Err(ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "InternalError", e.to_string())),
    }
}

fn physician(headers: &HeaderMap) -> Result<PhysicianId, ApiError> {
    let value = headers.get(PHYSICIAN_HEADER).ok_or_else(|| {
        ApiError::new(
            StatusCode::BAD_REQUEST,
            "MissingPhysicianId",
            "the X-Physician-Id header is required",
        )
    })?;
    let id = value
        .to_str()
        .map(PhysicianId::new)
        .map_err(|_| ApiError::from(Error::InvalidPhysicianId("<non-ascii>".into())))?;
    if !id.is_valid() {
        return Err(Error::InvalidPhysicianId(id.as_str().to_string()).into());
    }
    Ok(id)
}

fn body<T: DeserializeOwned>(bytes: &Bytes) -> Result<T, ApiError> {
    serde_json::from_slice(bytes)
        .map_err(|e| ApiError::new(StatusCode::BAD_REQUEST, "MalformedBody", e.to_string()))
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/cases", get(list_cases).post(ingest_case))
        .route("/cases/{id}/triage", post(triage))
        .route("/cases/{id}/draft", post(draft))
        .route("/cases/{id}/review", get(review_view))
        .route("/cases/{id}/session", post(open_session))
        .route("/cases/{id}/sections/{sid}/{move}", patch(edit_section))
        .route("/cases/{id}/confirm-medications", post(confirm_medications))
        .route("/cases/{id}/follow-up", post(set_follow_up))
        .route("/cases/{id}/approve", post(approve))
        .route("/cases/{id}/note.html", get(note_html))
        .fallback(|| async {
            ApiError::new(StatusCode::NOT_FOUND, "NotFound", "no such route")
        })
        .with_state(state)
}

async fn list_cases(State(s): State<AppState>) -> ApiResult<Vec<careloop_core::ingestion::QueueEntry>> {
    Ok(Json(s.store.list_queue()))
}

#[derive(Serialize, Deserialize)]
pub struct IngestAck {
    pub case_id: CaseId,
    pub seq: u64,
    pub digest: String,
}

async fn ingest_case(State(s): State<AppState>, bytes: Bytes) -> Result<(StatusCode, Json<IngestAck>), ApiError> {
    let ack = blocking(move || {
        let case = parse_case_bundle(&bytes)?;
        s.store.put_case(case)
    })
    .await?;
    Ok((
        StatusCode::CREATED,
        Json(IngestAck {
            case_id: ack.case_id,
            seq: ack.seq,
            digest: ack.digest,
        }),
    ))
}

async fn triage(State(s): State<AppState>, Path(id): Path<String>) -> ApiResult<careloop_core::triage::TriageResult> {
    let id = CaseId::new(id);
    blocking(move || triage_case(&s.store, &id, &s.triage_config, s.estimator.clone()))
        .await
        .map(Json)
}

async fn draft(State(s): State<AppState>, Path(id): Path<String>) -> ApiResult<careloop_core::draft::DraftReport> {
    let id = CaseId::new(id);
    blocking(move || draft_case(&s.store, &id, &s.generator, s.backend.as_deref()))
        .await
        .map(Json)
}

async fn review_view(State(s): State<AppState>, Path(id): Path<String>) -> ApiResult<review::ReviewView> {
    let id = CaseId::new(id);
    blocking(move || review::review_view(&s.store, &id)).await.map(Json)
}

async fn open_session(
    State(s): State<AppState>,
    Path(id): Path<String>,
    headers: HeaderMap,
) -> Result<(StatusCode, Json<review::ReviewSession>), ApiError> {
    let who = physician(&headers)?;
    let id = CaseId::new(id);
    let session = blocking(move || review::open_session(&s.store, &id, &who)).await?;
    Ok((StatusCode::CREATED, Json(session)))
}

#[derive(Serialize, Deserialize)]
pub struct EditBody {
    pub expected_before: String,
    pub after_text: String,
}

async fn edit_section(
    State(s): State<AppState>,
    Path((id, sid, tag)): Path<(String, String, String)>,
    headers: HeaderMap,
    bytes: Bytes,
) -> ApiResult<review::EditRecord> {
    let who = physician(&headers)?;
    let tag: MoveTag = tag
        .parse()
        .map_err(|e: String| ApiError::new(StatusCode::NOT_FOUND, "UnknownMove", e))?;
    let edit: EditBody = body(&bytes)?;
    let id = CaseId::new(id);
    blocking(move || {
        review::edit_section(&s.store, &id, &who, &sid, tag, &edit.expected_before, &edit.after_text)
    })
    .await
    .map(Json)
}

#[derive(Serialize, Deserialize)]
pub struct ConfirmBody {
    pub confirmed: bool,
}

async fn confirm_medications(
    State(s): State<AppState>,
    Path(id): Path<String>,
    headers: HeaderMap,
    bytes: Bytes,
) -> ApiResult<review::ReviewSession> {
    let who = physician(&headers)?;
    let b: ConfirmBody = body(&bytes)?;
    let id = CaseId::new(id);
    blocking(move || review::confirm_medications(&s.store, &id, &who, b.confirmed))
        .await
        .map(Json)
}

#[derive(Serialize, Deserialize)]
pub struct FollowUpBody {
    pub interval: FollowUpInterval,
}

async fn set_follow_up(
    State(s): State<AppState>,
    Path(id): Path<String>,
    headers: HeaderMap,
    bytes: Bytes,
) -> ApiResult<review::ReviewSession> {
    let who = physician(&headers)?;
    let b: FollowUpBody = body(&bytes)?;
    let id = CaseId::new(id);
    blocking(move || review::set_follow_up(&s.store, &id, &who, b.interval))
        .await
        .map(Json)
}

async fn approve(
    State(s): State<AppState>,
    Path(id): Path<String>,
    headers: HeaderMap,
) -> ApiResult<review::ApprovedNote> {
    let who = physician(&headers)?;
    let id = CaseId::new(id);
    blocking(move || review::approve(&s.store, &id, &who)).await.map(Json)
}

async fn note_html(State(s): State<AppState>, Path(id): Path<String>) -> Result<Response, ApiError> {
    let id = CaseId::new(id);
    if !s.store.contains(&id) {
        return Err(Error::UnknownCase(id).into());
    }
    match s.store.export_html(&id) {
        Some(html) => Ok(([(header::CACHE_CONTROL, "no-store")], Html(html)).into_response()),
        None => Err(ApiError::new(
            StatusCode::NOT_FOUND,
            "NotExported",
            format!("case `{id}` has no approved note yet"),
        )),
    }
}

/// Serve until ctrl-c.
pub async fn serve(state: AppState, addr: SocketAddr) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    eprintln!("listening on http://{}", listener.local_addr()?);
    axum::serve(listener, router(state))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}
