//! Append-only audit trail.
//!
//! On disk the log is one event per line:
//! `seq|timestamp|actor|action|case_id|digest`, where actor is `system` or
//! `physician:<id>`.

use std::fmt;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::domain::{CaseId, PhysicianId, Timestamp};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", content = "id", rename_all = "snake_case")]
pub enum Actor {
    System,
    Physician(PhysicianId),
}

impl fmt::Display for Actor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Actor::System => f.write_str("system"),
            Actor::Physician(id) => write!(f, "physician:{id}"),
        }
    }
}

impl FromStr for Actor {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "system" {
            return Ok(Actor::System);
        }
        match s.strip_prefix("physician:") {
            Some(id) if PhysicianId::new(id).is_valid() => Ok(Actor::Physician(PhysicianId::new(id))),
            _ => Err(format!("invalid actor `{s}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AuditAction {
    Ingested,
    Triaged,
    Drafted,
    Edited,
    ConfirmedMeds,
    SetFollowUp,
    Approved,
    Exported,
}

impl AuditAction {
    pub fn as_str(self) -> &'static str {
        match self {
            AuditAction::Ingested => "ingested",
            AuditAction::Triaged => "triaged",
            AuditAction::Drafted => "drafted",
            AuditAction::Edited => "edited",
            AuditAction::ConfirmedMeds => "confirmed_meds",
            AuditAction::SetFollowUp => "set_follow_up",
            AuditAction::Approved => "approved",
            AuditAction::Exported => "exported",
        }
    }

    /// Actions that only a physician may perform.
    pub fn requires_physician(self) -> bool {
        matches!(self, AuditAction::Approved | AuditAction::Exported)
    }
}

impl FromStr for AuditAction {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "ingested" => AuditAction::Ingested,
            "triaged" => AuditAction::Triaged,
            "drafted" => AuditAction::Drafted,
            "edited" => AuditAction::Edited,
            "confirmed_meds" => AuditAction::ConfirmedMeds,
            "set_follow_up" => AuditAction::SetFollowUp,
            "approved" => AuditAction::Approved,
            "exported" => AuditAction::Exported,
            other => return Err(format!("unknown audit action `{other}`")),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AuditEvent {
    pub seq: u64,
    pub timestamp: Timestamp,
    pub actor: Actor,
    pub action: AuditAction,
    pub case_id: CaseId,
    pub payload_digest: String,
}

impl AuditEvent {
    pub fn to_line(&self) -> String {
        format!(
            "{}|{}|{}|{}|{}|{}",
            self.seq,
            self.timestamp,
            self.actor,
            self.action.as_str(),
            self.case_id,
            self.payload_digest
        )
    }

    pub fn parse_line(line: &str) -> Result<Self, String> {
        let fields: Vec<&str> = line.split('|').collect();
        let [seq, ts, actor, action, case_id, digest] = fields.as_slice() else {
            return Err(format!("expected 6 fields, found {}", fields.len()));
        };
        Ok(AuditEvent {
            seq: seq.parse().map_err(|_| format!("bad seq `{seq}`"))?,
            timestamp: ts.parse()?,
            actor: actor.parse()?,
            action: action.parse()?,
            case_id: CaseId::new(*case_id),
            payload_digest: digest.to_string(),
        })
    }
}

pub(crate) fn check_author_of_record(actor: &Actor, action: AuditAction) -> Result<()> {
    if action.requires_physician() && *actor == Actor::System {
        return Err(Error::AuditViolation(format!(
            "`{}` must be performed by a physician",
            action.as_str()
        )));
    }
    Ok(())
}

/// In-memory event list with an optional append-only backing file.
pub(crate) struct AuditLog {
    events: Vec<AuditEvent>,
    file: Option<(PathBuf, File)>,
}

impl AuditLog {
    pub fn in_memory() -> Self {
        Self {
            events: Vec::new(),
            file: None,
        }
    }

    /// Load and verify an existing log, then keep it open for appends.
    pub fn open(path: &Path) -> Result<Self> {
        let mut events = Vec::new();
        if path.exists() {
            let reader = BufReader::new(File::open(path)?);
            for (n, line) in reader.lines().enumerate() {
                let line = line?;
                if line.trim().is_empty() {
                    continue;
                }
                let event = AuditEvent::parse_line(&line)
                    .map_err(|e| Error::Corrupt(format!("audit.log line {}: {e}", n + 1)))?;
                if event.seq != events.len() as u64 + 1 {
                    return Err(Error::Corrupt(format!(
                        "audit.log line {}: seq {} breaks the sequence",
                        n + 1,
                        event.seq
                    )));
                }
                check_author_of_record(&event.actor, event.action)
                    .map_err(|e| Error::Corrupt(format!("audit.log line {}: {e}", n + 1)))?;
                events.push(event);
            }
        }
        let file = OpenOptions::new().create(true).append(true).open(path)?;
        Ok(Self {
            events,
            file: Some((path.to_path_buf(), file)),
        })
    }

    pub fn append(
        &mut self,
        timestamp: Timestamp,
        actor: Actor,
        action: AuditAction,
        case_id: &CaseId,
        payload_digest: String,
    ) -> Result<AuditEvent> {
        check_author_of_record(&actor, action)?;
        let event = AuditEvent {
            seq: self.events.len() as u64 + 1,
            timestamp,
            actor,
            action,
            case_id: case_id.clone(),
            payload_digest,
        };
        if let Some((_, file)) = self.file.as_mut() {
            writeln!(file, "{}", event.to_line())?;
            file.sync_data()?;
        }
        self.events.push(event.clone());
        Ok(event)
    }

    pub fn events(&self) -> &[AuditEvent] {
        &self.events
    }

    pub fn path(&self) -> Option<&Path> {
        self.file.as_ref().map(|(p, _)| p.as_path())
    }
}
