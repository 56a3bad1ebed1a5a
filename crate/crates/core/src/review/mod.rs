//! Single-pass physician review: open, edit in place, confirm medications,
//! choose a follow-up interval, approve and export.
//!
//! Every mutation runs under the per-case lock of the store. Approval is the
//! only way to close a session and it is recorded under the physician.

mod export;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use export::render_note_html;

use crate::charts::ChartSpec;
use crate::digest::digest_bytes;
use crate::domain::{CaseId, PhysicianId, Timestamp, UrgencyLabel};
use crate::draft::{DraftReport, MoveTag, Moves, Origin, Topic};
use crate::error::{Error, Result};
use crate::ingestion::{Actor, AuditAction, CaseStore};
use crate::metrics::{modification_rate, scope_bucket, ScopeBucket};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SessionStatus {
    InReview,
    Approved,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FollowUpInterval {
    #[serde(rename = "1_week")]
    OneWeek,
    #[serde(rename = "2_weeks")]
    TwoWeeks,
    #[serde(rename = "1_month")]
    OneMonth,
    #[serde(rename = "3_months")]
    ThreeMonths,
    #[default]
    #[serde(rename = "none_selected")]
    NoneSelected,
}

impl FollowUpInterval {
    pub const ALL: [FollowUpInterval; 5] = [
        FollowUpInterval::OneWeek,
        FollowUpInterval::TwoWeeks,
        FollowUpInterval::OneMonth,
        FollowUpInterval::ThreeMonths,
        FollowUpInterval::NoneSelected,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            FollowUpInterval::OneWeek => "1_week",
            FollowUpInterval::TwoWeeks => "2_weeks",
            FollowUpInterval::OneMonth => "1_month",
            FollowUpInterval::ThreeMonths => "3_months",
            FollowUpInterval::NoneSelected => "none_selected",
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            FollowUpInterval::OneWeek => "1 week",
            FollowUpInterval::TwoWeeks => "2 weeks",
            FollowUpInterval::OneMonth => "1 month",
            FollowUpInterval::ThreeMonths => "3 months",
            FollowUpInterval::NoneSelected => "not selected",
        }
    }

    pub fn is_selected(self) -> bool {
        self != FollowUpInterval::NoneSelected
    }
}

impl fmt::Display for FollowUpInterval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for FollowUpInterval {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        FollowUpInterval::ALL
            .into_iter()
            .find(|i| i.as_str() == s)
            .ok_or_else(|| format!("unknown follow-up interval `{s}`"))
    }
}

/// Current text of one section during review.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SectionText {
    pub section_id: String,
    pub topic: Topic,
    pub moves: Moves,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EditRecord {
    pub seq: u32,
    pub section_id: String,
    pub move_tag: MoveTag,
    pub before_text: String,
    pub after_text: String,
    pub timestamp: Timestamp,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReviewSession {
    pub case_id: CaseId,
    pub physician_id: PhysicianId,
    pub status: SessionStatus,
    /// In draft section order.
    pub sections: Vec<SectionText>,
    pub edits: Vec<EditRecord>,
    pub medications_confirmed: bool,
    pub follow_up_interval: FollowUpInterval,
    pub opened_at: Timestamp,
    pub approved_at: Option<Timestamp>,
}

impl ReviewSession {
    fn from_draft(draft: &DraftReport, physician_id: PhysicianId, opened_at: Timestamp) -> Self {
        Self {
            case_id: draft.case_id.clone(),
            physician_id,
            status: SessionStatus::InReview,
            sections: section_texts(draft),
            edits: Vec::new(),
            medications_confirmed: false,
            follow_up_interval: FollowUpInterval::NoneSelected,
            opened_at,
            approved_at: None,
        }
    }

    pub fn section(&self, section_id: &str) -> Option<&SectionText> {
        self.sections.iter().find(|s| s.section_id == section_id)
    }

    /// Names of the approval gates not yet satisfied.
    pub fn unmet_preconditions(&self) -> Vec<String> {
        let mut unmet = Vec::new();
        if !self.medications_confirmed {
            unmet.push("medications_confirmed".to_string());
        }
        if !self.follow_up_interval.is_selected() {
            unmet.push("follow_up_interval".to_string());
        }
        unmet
    }
}

fn section_texts(draft: &DraftReport) -> Vec<SectionText> {
    draft
        .sections
        .iter()
        .map(|s| SectionText {
            section_id: s.section_id.clone(),
            topic: s.topic,
            moves: s.moves.clone(),
        })
        .collect()
}

/// One section of an approved note.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoteSection {
    pub section_id: String,
    pub topic: Topic,
    pub moves: Moves,
    pub gap_statements: Vec<String>,
    pub chart_refs: Vec<String>,
    pub origin: Origin,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ApprovedNote {
    pub case_id: CaseId,
    pub physician_id: PhysicianId,
    pub sections: Vec<NoteSection>,
    pub urgency: UrgencyLabel,
    pub follow_up_interval: FollowUpInterval,
    pub medications_confirmed: bool,
    pub modification_rate: f64,
    pub scope_bucket: ScopeBucket,
    pub approved_at: Timestamp,
    pub draft_digest: String,
    /// sha-256 of the exported HTML.
    pub export_digest: String,
}

/// Everything the review page needs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReviewView {
    pub case_id: CaseId,
    pub urgency: UrgencyLabel,
    pub badge_color: String,
    pub draft: DraftReport,
    pub charts: Vec<ChartSpec>,
    pub session: Option<ReviewSession>,
}

/// All move texts in section order, one per line.
pub fn full_text(sections: &[SectionText]) -> String {
    sections
        .iter()
        .flat_map(|s| s.moves.iter().map(|(_, t)| t.to_string()))
        .collect::<Vec<_>>()
        .join("\n")
}

/// Reapply an edit list to the draft text.
pub fn replay_edits(draft: &DraftReport, edits: &[EditRecord]) -> Result<Vec<SectionText>> {
    let mut sections = section_texts(draft);
    for edit in edits {
        let section = sections
            .iter_mut()
            .find(|s| s.section_id == edit.section_id)
            .ok_or_else(|| Error::UnknownSection(edit.section_id.clone()))?;
        let text = section.moves.get_mut(edit.move_tag);
        if *text != edit.before_text {
            return Err(Error::StaleEdit);
        }
        *text = edit.after_text.clone();
    }
    Ok(sections)
}

fn check_physician(physician: &PhysicianId) -> Result<()> {
    if physician.is_valid() {
        Ok(())
    } else {
        Err(Error::InvalidPhysicianId(physician.as_str().to_string()))
    }
}

/// Load the session for a mutation by `physician`.
fn open_for_change(store: &CaseStore, case_id: &CaseId, physician: &PhysicianId) -> Result<ReviewSession> {
    check_physician(physician)?;
    store.get_case(case_id)?;
    let session = store
        .session(case_id)
        .ok_or_else(|| Error::NoSession(case_id.clone()))?;
    if session.status == SessionStatus::Approved {
        return Err(Error::Approved);
    }
    if &session.physician_id != physician {
        return Err(Error::NotSessionOwner {
            case_id: case_id.clone(),
            owner: session.physician_id.as_str().to_string(),
        });
    }
    Ok(session)
}

pub fn review_view(store: &CaseStore, case_id: &CaseId) -> Result<ReviewView> {
    store.get_case(case_id)?;
    let draft = store
        .draft(case_id)
        .ok_or_else(|| Error::MissingDraft(case_id.clone()))?;
    Ok(ReviewView {
        case_id: case_id.clone(),
        urgency: draft.urgency,
        badge_color: draft.urgency.badge_color().to_string(),
        charts: store.charts(case_id),
        session: store.session(case_id),
        draft,
    })
}

pub fn open_session(store: &CaseStore, case_id: &CaseId, physician: &PhysicianId) -> Result<ReviewSession> {
    check_physician(physician)?;
    store.with_case_lock(case_id, || {
        store.get_case(case_id)?;
        let draft = store
            .draft(case_id)
            .ok_or_else(|| Error::MissingDraft(case_id.clone()))?;
        if store.session(case_id).is_some() {
            return Err(Error::SessionExists(case_id.clone()));
        }
        let session = ReviewSession::from_draft(&draft, physician.clone(), store.now());
        store.save_session(case_id, session.clone(), None)?;
        Ok(session)
    })
}

/// Replace one move if its current text still equals `expected_before`.
pub fn edit_section(
    store: &CaseStore,
    case_id: &CaseId,
    physician: &PhysicianId,
    section_id: &str,
    move_tag: MoveTag,
    expected_before: &str,
    after_text: &str,
) -> Result<EditRecord> {
    store.with_case_lock(case_id, || {
        let mut session = open_for_change(store, case_id, physician)?;
        let seq = session.edits.last().map_or(1, |e| e.seq + 1);
        let section = session
            .sections
            .iter_mut()
            .find(|s| s.section_id == section_id)
            .ok_or_else(|| Error::UnknownSection(section_id.to_string()))?;
        let text = section.moves.get_mut(move_tag);
        if text != expected_before {
            return Err(Error::StaleEdit);
        }
        let record = EditRecord {
            seq,
            section_id: section_id.to_string(),
            move_tag,
            before_text: text.clone(),
            after_text: after_text.to_string(),
            timestamp: store.now(),
        };
        *text = after_text.to_string();
        session.edits.push(record.clone());
        store.save_session(
            case_id,
            session,
            Some((Actor::Physician(physician.clone()), AuditAction::Edited)),
        )?;
        Ok(record)
    })
}

pub fn confirm_medications(
    store: &CaseStore,
    case_id: &CaseId,
    physician: &PhysicianId,
    value: bool,
) -> Result<ReviewSession> {
    store.with_case_lock(case_id, || {
        let mut session = open_for_change(store, case_id, physician)?;
        session.medications_confirmed = value;
        store.save_session(
            case_id,
            session.clone(),
            Some((Actor::Physician(physician.clone()), AuditAction::ConfirmedMeds)),
        )?;
        Ok(session)
    })
}

pub fn set_follow_up(
    store: &CaseStore,
    case_id: &CaseId,
    physician: &PhysicianId,
    interval: FollowUpInterval,
) -> Result<ReviewSession> {
    store.with_case_lock(case_id, || {
        let mut session = open_for_change(store, case_id, physician)?;
        session.follow_up_interval = interval;
        store.save_session(
            case_id,
            session.clone(),
            Some((Actor::Physician(physician.clone()), AuditAction::SetFollowUp)),
        )?;
        Ok(session)
    })
}

/// Close the session and export the note. Fails with `PreconditionUnmet`
/// naming each unsatisfied gate.
pub fn approve(store: &CaseStore, case_id: &CaseId, physician: &PhysicianId) -> Result<ApprovedNote> {
    store.with_case_lock(case_id, || {
        let mut session = open_for_change(store, case_id, physician)?;
        let unmet = session.unmet_preconditions();
        if !unmet.is_empty() {
            return Err(Error::PreconditionUnmet(unmet));
        }
        let draft = store
            .draft(case_id)
            .ok_or_else(|| Error::MissingDraft(case_id.clone()))?;
        let charts = store.charts(case_id);
        let now = store.now();

        let rate = modification_rate(&full_text(&section_texts(&draft)), &full_text(&session.sections));
        let sections = session
            .sections
            .iter()
            .map(|s| {
                let drafted = draft.section(&s.section_id);
                NoteSection {
                    section_id: s.section_id.clone(),
                    topic: s.topic,
                    moves: s.moves.clone(),
                    gap_statements: drafted.map(|d| d.gap_statements.clone()).unwrap_or_default(),
                    chart_refs: drafted.map(|d| d.chart_refs.clone()).unwrap_or_default(),
                    origin: drafted.map_or(Origin::Template, |d| d.origin),
                }
            })
            .collect();
        let mut note = ApprovedNote {
            case_id: case_id.clone(),
            physician_id: physician.clone(),
            sections,
            urgency: draft.urgency,
            follow_up_interval: session.follow_up_interval,
            medications_confirmed: session.medications_confirmed,
            modification_rate: rate,
            scope_bucket: scope_bucket(rate),
            approved_at: now,
            draft_digest: draft.content_digest(),
            export_digest: String::new(),
        };
        let html = render_note_html(&note, &charts);
        note.export_digest = digest_bytes(html.as_bytes());

        session.status = SessionStatus::Approved;
        session.approved_at = Some(now);
        store.save_approval(case_id, session, note.clone(), html)?;
        Ok(note)
    })
}
