//! The shared case store ("unified memory").
//!
//! Reads come from an in-memory cache. When the store is backed by a
//! directory every write goes through to disk first:
//!
//! ```text
//! <root>/audit.log
//! <root>/cases/<id>.json     <root>/triage/<id>.json   <root>/drafts/<id>.json
//! <root>/charts/<id>.json    <root>/sessions/<id>.json <root>/notes/<id>.json
//! <root>/exports/<id>.html
//! ```
//!
//! Writers for one case are serialized through [`CaseStore::with_case_lock`];
//! audit appends are serialized globally.

use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex, RwLock};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::charts::ChartSpec;
use crate::digest::{digest_bytes, digest_json};
use crate::domain::{validate_case, CaseId, PatientCase, Timestamp, UrgencyLabel};
use crate::draft::DraftReport;
use crate::error::{BundleError, Error, Result};
use crate::review::{ApprovedNote, ReviewSession, SessionStatus};
use crate::triage::TriageResult;

use super::audit::{Actor, AuditAction, AuditEvent, AuditLog};
use super::bundle::{parse_case_bundle, serialize_case};

type Clock = Box<dyn Fn() -> Timestamp + Send + Sync>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CaseStatus {
    Untriaged,
    Triaged,
    Drafted,
    InReview,
    Approved,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QueueEntry {
    pub case_id: CaseId,
    /// `None` until the case has been triaged.
    pub label: Option<UrgencyLabel>,
    pub status: CaseStatus,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PutAck {
    pub case_id: CaseId,
    pub seq: u64,
    pub digest: String,
}

#[derive(Default)]
struct State {
    order: Vec<CaseId>,
    cases: HashMap<CaseId, PatientCase>,
    triage: HashMap<CaseId, TriageResult>,
    drafts: HashMap<CaseId, DraftReport>,
    charts: HashMap<CaseId, Vec<ChartSpec>>,
    sessions: HashMap<CaseId, ReviewSession>,
    notes: HashMap<CaseId, ApprovedNote>,
    exports: HashMap<CaseId, String>,
}

pub struct CaseStore {
    root: Option<PathBuf>,
    state: RwLock<State>,
    audit: Mutex<AuditLog>,
    locks: Mutex<HashMap<CaseId, Arc<Mutex<()>>>>,
    clock: Clock,
}

const DIRS: [&str; 7] = [
    "cases", "triage", "drafts", "charts", "sessions", "notes", "exports",
];

impl CaseStore {
    pub fn in_memory() -> Self {
        Self {
            root: None,
            state: RwLock::new(State::default()),
            audit: Mutex::new(AuditLog::in_memory()),
            locks: Mutex::new(HashMap::new()),
            clock: Box::new(Timestamp::now),
        }
    }

    /// Open (or create) a directory-backed store and load everything in it.
    pub fn open(root: impl AsRef<Path>) -> Result<Self> {
        let root = root.as_ref().to_path_buf();
        for dir in DIRS {
            fs::create_dir_all(root.join(dir))?;
        }
        let audit = AuditLog::open(&root.join("audit.log"))?;
        let mut state = State::default();

        for event in audit.events() {
            if event.action != AuditAction::Ingested {
                continue;
            }
            let id = event.case_id.clone();
            if state.cases.contains_key(&id) {
                return Err(Error::Corrupt(format!("case `{id}` ingested twice")));
            }
            let path = artifact_path(&root, "cases", &id, "json");
            let raw = fs::read(&path).map_err(|e| {
                Error::Corrupt(format!("missing bundle for `{id}` ({}): {e}", path.display()))
            })?;
            let case = parse_case_bundle(&raw)?;
            state.cases.insert(id.clone(), case);
            state.order.push(id);
        }

        for id in state.order.clone() {
            if let Some(t) = read_json::<TriageResult>(&root, "triage", &id)? {
                state.triage.insert(id.clone(), t);
            }
            if let Some(d) = read_json::<DraftReport>(&root, "drafts", &id)? {
                if !state.triage.contains_key(&id) {
                    return Err(Error::Corrupt(format!("draft for `{id}` without triage")));
                }
                state.drafts.insert(id.clone(), d);
            }
            if let Some(c) = read_json::<Vec<ChartSpec>>(&root, "charts", &id)? {
                state.charts.insert(id.clone(), c);
            }
            if let Some(s) = read_json::<ReviewSession>(&root, "sessions", &id)? {
                state.sessions.insert(id.clone(), s);
            }
            if let Some(n) = read_json::<ApprovedNote>(&root, "notes", &id)? {
                let approved = state
                    .sessions
                    .get(&id)
                    .is_some_and(|s| s.status == SessionStatus::Approved);
                if !approved {
                    return Err(Error::Corrupt(format!(
                        "note for `{id}` without an approved session"
                    )));
                }
                state.notes.insert(id.clone(), n);
            }
            let html = artifact_path(&root, "exports", &id, "html");
            if html.exists() {
                state.exports.insert(id.clone(), fs::read_to_string(html)?);
            }
        }

        Ok(Self {
            root: Some(root),
            state: RwLock::new(state),
            audit: Mutex::new(audit),
            locks: Mutex::new(HashMap::new()),
            clock: Box::new(Timestamp::now),
        })
    }

    /// Replace the wall clock used for audit and artifact timestamps.
    pub fn with_clock(mut self, clock: impl Fn() -> Timestamp + Send + Sync + 'static) -> Self {
        self.clock = Box::new(clock);
        self
    }

    pub fn now(&self) -> Timestamp {
        (self.clock)()
    }

    pub fn root(&self) -> Option<&Path> {
        self.root.as_deref()
    }

    /// Run `f` while holding the write lock of one case.
    pub fn with_case_lock<R>(&self, case_id: &CaseId, f: impl FnOnce() -> R) -> R {
        let lock = {
            let mut locks = self.locks.lock().expect("lock table poisoned");
            locks.entry(case_id.clone()).or_default().clone()
        };
        let _guard = lock.lock().unwrap_or_else(|e| e.into_inner());
        f()
    }

    // -- cases --------------------------------------------------------------

    pub fn put_case(&self, case: PatientCase) -> Result<PutAck> {
        self.check_new_case(&case)?;
        let id = case.case_id.clone();
        self.with_case_lock(&id, || {
            if self.contains(&id) {
                return Err(Error::DuplicateCase(id.clone()));
            }
            let text = serialize_case(&case);
            self.write_artifact("cases", &id, "json", text.as_bytes())?;
            let digest = digest_bytes(text.as_bytes());
            let event = self.append_audit(Actor::System, AuditAction::Ingested, &id, digest.clone())?;
            let mut state = self.write_state();
            state.order.push(id.clone());
            state.cases.insert(id.clone(), case);
            Ok(PutAck {
                case_id: id.clone(),
                seq: event.seq,
                digest,
            })
        })
    }

    /// Check a batch up front and ingest it only if every case would be accepted.
    pub fn put_cases(&self, cases: Vec<PatientCase>) -> Result<Vec<PutAck>> {
        let mut seen = std::collections::HashSet::new();
        for case in &cases {
            self.check_new_case(case)?;
            if !seen.insert(case.case_id.clone()) {
                return Err(Error::DuplicateCase(case.case_id.clone()));
            }
        }
        cases.into_iter().map(|c| self.put_case(c)).collect()
    }

    fn check_new_case(&self, case: &PatientCase) -> Result<()> {
        let issues = validate_case(case);
        if !issues.is_empty() {
            return Err(BundleError::Invariant(issues).into());
        }
        if !case.case_id.is_path_safe() {
            return Err(Error::InvalidCaseId(case.case_id.clone()));
        }
        if self.contains(&case.case_id) {
            return Err(Error::DuplicateCase(case.case_id.clone()));
        }
        Ok(())
    }

    pub fn contains(&self, case_id: &CaseId) -> bool {
        self.read_state().cases.contains_key(case_id)
    }

    pub fn get_case(&self, case_id: &CaseId) -> Result<PatientCase> {
        self.read_state()
            .cases
            .get(case_id)
            .cloned()
            .ok_or_else(|| Error::UnknownCase(case_id.clone()))
    }

    /// Case ids in ingestion order.
    pub fn case_ids(&self) -> Vec<CaseId> {
        self.read_state().order.clone()
    }

    /// The review queue, always in ingestion order, with current labels attached.
    pub fn list_queue(&self) -> Vec<QueueEntry> {
        let state = self.read_state();
        state
            .order
            .iter()
            .map(|id| {
                let status = match state.sessions.get(id).map(|s| s.status) {
                    Some(SessionStatus::Approved) => CaseStatus::Approved,
                    Some(SessionStatus::InReview) => CaseStatus::InReview,
                    None if state.drafts.contains_key(id) => CaseStatus::Drafted,
                    None if state.triage.contains_key(id) => CaseStatus::Triaged,
                    None => CaseStatus::Untriaged,
                };
                QueueEntry {
                    case_id: id.clone(),
                    label: state.triage.get(id).map(|t| t.label),
                    status,
                }
            })
            .collect()
    }

    // -- derived artifacts --------------------------------------------------

    pub fn save_triage(&self, case_id: &CaseId, result: TriageResult) -> Result<AuditEvent> {
        self.require_case(case_id)?;
        let bytes = to_json_bytes(&result)?;
        self.write_artifact("triage", case_id, "json", &bytes)?;
        let event = self.append_audit(
            Actor::System,
            AuditAction::Triaged,
            case_id,
            digest_bytes(&bytes),
        )?;
        self.write_state().triage.insert(case_id.clone(), result);
        Ok(event)
    }

    pub fn triage(&self, case_id: &CaseId) -> Option<TriageResult> {
        self.read_state().triage.get(case_id).cloned()
    }

    pub fn save_draft(
        &self,
        case_id: &CaseId,
        draft: DraftReport,
        charts: Vec<ChartSpec>,
    ) -> Result<AuditEvent> {
        self.require_case(case_id)?;
        if self.triage(case_id).is_none() {
            return Err(Error::MissingTriage(case_id.clone()));
        }
        // The open session was built from the current draft.
        if self.session(case_id).is_some() {
            return Err(Error::SessionExists(case_id.clone()));
        }
        let chart_bytes = to_json_bytes(&charts)?;
        let bytes = to_json_bytes(&draft)?;
        self.write_artifact("charts", case_id, "json", &chart_bytes)?;
        self.write_artifact("drafts", case_id, "json", &bytes)?;
        let event = self.append_audit(
            Actor::System,
            AuditAction::Drafted,
            case_id,
            digest_json(&draft.digest_view()),
        )?;
        let mut state = self.write_state();
        state.drafts.insert(case_id.clone(), draft);
        state.charts.insert(case_id.clone(), charts);
        Ok(event)
    }

    pub fn draft(&self, case_id: &CaseId) -> Option<DraftReport> {
        self.read_state().drafts.get(case_id).cloned()
    }

    pub fn charts(&self, case_id: &CaseId) -> Vec<ChartSpec> {
        self.read_state()
            .charts
            .get(case_id)
            .cloned()
            .unwrap_or_default()
    }

    pub fn session(&self, case_id: &CaseId) -> Option<ReviewSession> {
        self.read_state().sessions.get(case_id).cloned()
    }

    /// Persist a session, optionally recording a physician action against it.
    pub fn save_session(
        &self,
        case_id: &CaseId,
        session: ReviewSession,
        action: Option<(Actor, AuditAction)>,
    ) -> Result<Option<AuditEvent>> {
        self.require_case(case_id)?;
        if session.status == SessionStatus::Approved {
            return Err(Error::AuditViolation(
                "approved sessions are persisted only through save_approval".to_string(),
            ));
        }
        let bytes = to_json_bytes(&session)?;
        self.write_artifact("sessions", case_id, "json", &bytes)?;
        let event = match action {
            Some((actor, action)) => {
                Some(self.append_audit(actor, action, case_id, digest_bytes(&bytes))?)
            }
            None => None,
        };
        self.write_state().sessions.insert(case_id.clone(), session);
        Ok(event)
    }

    /// Persist an approval: the closed session, the note and its HTML export.
    /// Records `approved` then `exported` under the approving physician.
    pub fn save_approval(
        &self,
        case_id: &CaseId,
        session: ReviewSession,
        note: ApprovedNote,
        html: String,
    ) -> Result<(AuditEvent, AuditEvent)> {
        self.require_case(case_id)?;
        if session.status != SessionStatus::Approved {
            return Err(Error::AuditViolation(
                "a note requires an approved session".to_string(),
            ));
        }
        if self.read_state().notes.contains_key(case_id) {
            return Err(Error::Approved);
        }
        let actor = Actor::Physician(note.physician_id.clone());
        let session_bytes = to_json_bytes(&session)?;
        let note_bytes = to_json_bytes(&note)?;
        self.write_artifact("sessions", case_id, "json", &session_bytes)?;
        self.write_artifact("notes", case_id, "json", &note_bytes)?;
        let approved = self.append_audit(
            actor.clone(),
            AuditAction::Approved,
            case_id,
            digest_bytes(&note_bytes),
        )?;
        self.write_artifact("exports", case_id, "html", html.as_bytes())?;
        let exported = self.append_audit(
            actor,
            AuditAction::Exported,
            case_id,
            digest_bytes(html.as_bytes()),
        )?;
        let mut state = self.write_state();
        state.sessions.insert(case_id.clone(), session);
        state.notes.insert(case_id.clone(), note);
        state.exports.insert(case_id.clone(), html);
        Ok((approved, exported))
    }

    pub fn note(&self, case_id: &CaseId) -> Option<ApprovedNote> {
        self.read_state().notes.get(case_id).cloned()
    }

    pub fn export_html(&self, case_id: &CaseId) -> Option<String> {
        self.read_state().exports.get(case_id).cloned()
    }

    // -- audit --------------------------------------------------------------

    pub fn audit_events(&self) -> Vec<AuditEvent> {
        self.audit.lock().expect("audit poisoned").events().to_vec()
    }

    pub fn audit_path(&self) -> Option<PathBuf> {
        self.audit
            .lock()
            .expect("audit poisoned")
            .path()
            .map(Path::to_path_buf)
    }

    fn append_audit(
        &self,
        actor: Actor,
        action: AuditAction,
        case_id: &CaseId,
        digest: String,
    ) -> Result<AuditEvent> {
        let mut audit = self.audit.lock().expect("audit poisoned");
        audit.append(self.now(), actor, action, case_id, digest)
    }

    // -- helpers ------------------------------------------------------------

    fn require_case(&self, case_id: &CaseId) -> Result<()> {
        if self.contains(case_id) {
            Ok(())
        } else {
            Err(Error::UnknownCase(case_id.clone()))
        }
    }

    fn read_state(&self) -> std::sync::RwLockReadGuard<'_, State> {
        self.state.read().unwrap_or_else(|e| e.into_inner())
    }

    fn write_state(&self) -> std::sync::RwLockWriteGuard<'_, State> {
        self.state.write().unwrap_or_else(|e| e.into_inner())
    }

    fn write_artifact(&self, kind: &str, id: &CaseId, ext: &str, bytes: &[u8]) -> Result<()> {
        let Some(root) = &self.root else {
            return Ok(());
        };
        let path = artifact_path(root, kind, id, ext);
        let tmp = path.with_extension(format!("{ext}.tmp"));
        fs::write(&tmp, bytes)?;
        fs::rename(&tmp, &path)?;
        Ok(())
    }
}

fn artifact_path(root: &Path, kind: &str, id: &CaseId, ext: &str) -> PathBuf {
    root.join(kind).join(format!("{id}.{ext}"))
}

fn to_json_bytes<T: Serialize>(value: &T) -> Result<Vec<u8>> {
    let mut bytes = serde_json::to_vec_pretty(value)?;
    bytes.push(b'\n');
    Ok(bytes)
}

fn read_json<T: DeserializeOwned>(root: &Path, kind: &str, id: &CaseId) -> Result<Option<T>> {
    let path = artifact_path(root, kind, id, "json");
    if !path.exists() {
        return Ok(None);
    }
    let bytes = fs::read(&path)?;
    serde_json::from_slice(&bytes)
        .map(Some)
        .map_err(|e| Error::Corrupt(format!("{}: {e}", path.display())))
}
