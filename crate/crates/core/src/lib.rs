//! Clinician-in-the-loop adherence reporting: case ingestion, urgency triage
//! with fail-safe escalation, bounded draft generation, chart pairing,
//! physician review and export, and evaluation statistics.

pub mod charts;
pub mod digest;
pub mod domain;
pub mod draft;
pub mod error;
pub mod generation;
pub mod ingestion;
pub mod metrics;
pub mod review;
pub mod simulator;
pub mod triage;

pub use error::{BundleError, Error, Result};
