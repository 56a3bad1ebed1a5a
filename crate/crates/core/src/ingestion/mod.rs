//! Case-bundle parsing, dialogue signal extraction and the shared case store.

mod audit;
mod bundle;
mod signals;
mod store;

pub use audit::{Actor, AuditAction, AuditEvent};
pub use bundle::{parse_case_bundle, serialize_case};
pub use signals::{annotate_dialogue, classify_turn_text};
pub use store::{CaseStatus, CaseStore, PutAck, QueueEntry};
