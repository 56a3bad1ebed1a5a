#![allow(dead_code)]

use std::path::PathBuf;
use std::sync::atomic::{AtomicU32, Ordering};

use careloop_core::domain::{CaseId, PatientCase};
use careloop_core::draft::{draft_case, DraftReport, GeneratorConfig};
use careloop_core::ingestion::CaseStore;
use careloop_core::triage::{triage_case, TriageConfig};

static NEXT: AtomicU32 = AtomicU32::new(0);

/// Fresh directory-backed store under the shared target tmp dir. The
/// directories are kept so audit logs can be inspected after the run.
pub fn suite_store(name: &str) -> (CaseStore, PathBuf) {
    let dir = PathBuf::from(env!("CARGO_TARGET_TMPDIR"))
        .join("stores")
        .join(format!(
            "core-{name}-{}-{}",
            std::process::id(),
            NEXT.fetch_add(1, Ordering::Relaxed)
        ));
    if dir.exists() {
        std::fs::remove_dir_all(&dir).unwrap();
    }
    (CaseStore::open(&dir).unwrap(), dir)
}

/// Ingest, triage (rule-only) and template-draft one case.
pub fn prepare(store: &CaseStore, case: PatientCase) -> (CaseId, DraftReport) {
    let id = case.case_id.clone();
    store.put_case(case).unwrap();
    triage_case(store, &id, &TriageConfig::default(), None).unwrap();
    let draft = draft_case(store, &id, &GeneratorConfig::default(), None).unwrap();
    (id, draft)
}
