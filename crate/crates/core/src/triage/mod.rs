//! Risk assessment: adherence summary, vital trends, rule-based urgency with
//! an optional external estimate, and the critical-task fail-safe.

mod adherence;
mod classify;
mod config;
mod trends;

use std::sync::mpsc;
use std::sync::Arc;
use std::time::Duration;

use thiserror::Error;

pub use adherence::{summarize_adherence, AdherenceSummary, MedicationAdherence, TaskCoverage};
pub use classify::{classify, RuleFiring, RuleId, TriageResult};
pub use config::{TriageConfig, VitalRange, DEFAULT_TRIAGE_CONFIG};
pub use trends::{detect_trends, least_squares_slope, TrendFindings, VitalTrend};

use crate::domain::{CaseId, PatientCase, UrgencyLabel};
use crate::error::Result;
use crate::ingestion::CaseStore;

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum EstimatorError {
    #[error("estimator unavailable: {0}")]
    Unavailable(String),
    #[error("estimator timed out")]
    Timeout,
    #[error("estimator returned an unusable answer: {0}")]
    InvalidResponse(String),
}

/// Source of an initial urgency estimate, such as a hosted language model.
pub trait UrgencyEstimator: Send + Sync {
    fn estimate(
        &self,
        case: &PatientCase,
        adherence: &AdherenceSummary,
        trends: &TrendFindings,
    ) -> Result<UrgencyLabel, EstimatorError>;
}

/// Full triage pipeline for one stored case.
///
/// The estimator runs on its own thread and is abandoned after the configured
/// timeout; any estimator failure falls back to rule-only classification and
/// is noted in the rationale.
pub fn triage_case(
    store: &CaseStore,
    case_id: &CaseId,
    config: &TriageConfig,
    estimator: Option<Arc<dyn UrgencyEstimator>>,
) -> Result<TriageResult> {
    store.with_case_lock(case_id, || {
        let result = assess_case(store, case_id, config, estimator)?;
        store.save_triage(case_id, result.clone())?;
        Ok(result)
    })
}

/// Triage a stored case without persisting the result.
pub fn assess_case(
    store: &CaseStore,
    case_id: &CaseId,
    config: &TriageConfig,
    estimator: Option<Arc<dyn UrgencyEstimator>>,
) -> Result<TriageResult> {
    let case = store.get_case(case_id)?;
    let adherence = summarize_adherence(&case);
    let trends = detect_trends(&case, config);

    let (estimate, fallback) = match estimator {
        None => (None, None),
        Some(estimator) => {
            let timeout = Duration::from_secs(config.estimator_timeout_seconds);
            match run_with_timeout(estimator, &case, &adherence, &trends, timeout) {
                Ok(label) => (Some(label), None),
                Err(e) => (None, Some(e.to_string())),
            }
        }
    };

    let mut result = classify(&case, &adherence, &trends, config, estimate);
    if let Some(reason) = fallback {
        result.note_fallback(&reason);
    }
    Ok(result)
}

fn run_with_timeout(
    estimator: Arc<dyn UrgencyEstimator>,
    case: &PatientCase,
    adherence: &AdherenceSummary,
    trends: &TrendFindings,
    timeout: Duration,
) -> Result<UrgencyLabel, EstimatorError> {
    let (tx, rx) = mpsc::channel();
    let (case, adherence, trends) = (case.clone(), adherence.clone(), trends.clone());
    std::thread::spawn(move || {
        let _ = tx.send(estimator.estimate(&case, &adherence, &trends));
    });
    match rx.recv_timeout(timeout) {
        Ok(result) => result,
        Err(mpsc::RecvTimeoutError::Timeout) => Err(EstimatorError::Timeout),
        Err(mpsc::RecvTimeoutError::Disconnected) => Err(EstimatorError::Unavailable(
            "estimator thread ended without an answer".to_string(),
        )),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::fixtures::hypertension_case;
    use crate::domain::{AdherenceSignal, Timestamp, VitalSample};
    use crate::ingestion::AuditAction;
    use UrgencyLabel::*;

    fn run(case: &PatientCase, estimate: Option<UrgencyLabel>) -> TriageResult {
        let config = TriageConfig::default();
        let a = summarize_adherence(case);
        let t = detect_trends(case, &config);
        classify(case, &a, &t, &config, estimate)
    }

    #[test]
    fn missed_critical_task_escalates_despite_clean_data() {
        let mut case = hypertension_case();
        case.monitoring_tasks[0].completion_timestamps.truncate(3);
        let r = run(&case, None);
        assert_eq!(r.rule_floor, Stable);
        assert_eq!(r.label, Urgent);
        assert!(r.failsafe_triggered);
        assert_eq!(r.missed_critical_tasks, vec!["bp-daily"]);
        assert!(r.fired(RuleId::FailSafeCriticalTask));
    }

    #[test]
    fn clean_case_is_stable() {
        let r = run(&hypertension_case(), None);
        assert_eq!(r.label, Stable);
        assert!(!r.failsafe_triggered);
        assert_eq!(r.rationale.len(), 1);
        assert_eq!(r.rationale[0].rule, RuleId::NoRuleFired);
    }

    #[test]
    fn non_critical_task_does_not_trigger_failsafe() {
        let mut case = hypertension_case();
        case.monitoring_tasks[0].critical = false;
        case.monitoring_tasks[0].completion_timestamps.clear();
        assert_eq!(run(&case, None).label, Stable);
    }

    /// Build cases whose rule floor is each of the three labels.
    fn case_with_floor(floor: UrgencyLabel) -> PatientCase {
        let mut case = hypertension_case();
        let n = match floor {
            Stable => 0,
            Attention => 1,
            Urgent => 3,
        };
        for s in case.vitals[0].samples.iter_mut().take(n) {
            s.value = 150.0;
        }
        // Keep the trend flat so only the deviation rule contributes.
        for s in case.vitals[0].samples.iter_mut().rev().take(n) {
            s.value = 150.0;
        }
        case
    }

    #[test]
    fn estimate_never_lowers_below_floor_all_pairs() {
        for floor in UrgencyLabel::ALL {
            let case = case_with_floor(floor);
            assert_eq!(run(&case, None).rule_floor, floor, "fixture for {floor}");
            for estimate in UrgencyLabel::ALL {
                let r = run(&case, Some(estimate));
                assert_eq!(r.label, severity_max_oracle(floor, estimate));
                assert!(r.label >= r.rule_floor);
                assert_eq!(r.model_estimate, Some(estimate));
            }
        }
    }

    fn severity_max_oracle(a: UrgencyLabel, b: UrgencyLabel) -> UrgencyLabel {
        let rank = |l: UrgencyLabel| match l {
            Stable => 0,
            Attention => 1,
            Urgent => 2,
        };
        if rank(a) >= rank(b) {
            a
        } else {
            b
        }
    }

    #[test]
    fn adherence_and_dialogue_rules() {
        let mut case = hypertension_case();
        case.medications[0].recorded_doses = 5;
        case.medications[0].dose_log.truncate(5);
        let r = run(&case, None);
        assert_eq!(r.rule_floor, Attention);
        assert!(r.fired(RuleId::AdherenceAttention));

        case.medications[0].recorded_doses = 3;
        case.medications[0].dose_log.truncate(3);
        let r = run(&case, None);
        assert_eq!(r.rule_floor, Urgent);
        assert!(r.fired(RuleId::AdherenceUrgent) && r.fired(RuleId::AdherenceAttention));

        let mut case = hypertension_case();
        case.dialogue[0].adherence_signal = AdherenceSignal::ReportedMissedDose;
        assert_eq!(run(&case, None).rule_floor, Attention);
    }

    #[test]
    fn slope_rule_fires_within_range() {
        let mut case = hypertension_case();
        for (i, s) in case.vitals[0].samples.iter_mut().enumerate() {
            s.value = 100.0 + 5.0 * i as f64;
        }
        let r = run(&case, None);
        assert_eq!(r.deviations_total, 0);
        assert!(r.fired(RuleId::SlopeAlert));
        assert_eq!(r.label, Attention);
    }

    #[test]
    fn zero_medications_noted() {
        let mut case = hypertension_case();
        case.medications.clear();
        let r = run(&case, None);
        assert_eq!(r.rationale[0].rule, RuleId::NoMedications);
        assert_eq!(r.label, Stable);
    }

    #[test]
    fn rationale_in_evaluation_order() {
        let mut case = hypertension_case();
        case.medications[0].recorded_doses = 2;
        case.medications[0].dose_log.truncate(2);
        let start = case.reporting_period.start;
        case.vitals[0].samples = (0..7)
            .map(|i| VitalSample {
                timestamp: Timestamp::at(start + chrono::Days::new(i), 7, 30, 0),
                value: 150.0 + 10.0 * i as f64,
            })
            .collect();
        case.dialogue[0].adherence_signal = AdherenceSignal::ReportedMissedDose;
        case.monitoring_tasks[0].completion_timestamps.pop();
        let r = run(&case, Some(Attention));
        let rules: Vec<RuleId> = r.rationale.iter().map(|f| f.rule).collect();
        assert_eq!(
            rules,
            vec![
                RuleId::DeviationsUrgent,
                RuleId::AdherenceUrgent,
                RuleId::DeviationsAttention,
                RuleId::AdherenceAttention,
                RuleId::SlopeAlert,
                RuleId::MissedDoseReport,
                RuleId::ModelEstimate,
                RuleId::FailSafeCriticalTask,
            ]
        );
    }

    struct Fixed(std::result::Result<UrgencyLabel, EstimatorError>);

    impl UrgencyEstimator for Fixed {
        fn estimate(
            &self,
            _: &PatientCase,
            _: &AdherenceSummary,
            _: &TrendFindings,
        ) -> std::result::Result<UrgencyLabel, EstimatorError> {
            self.0.clone()
        }
    }

    struct Slow;

    impl UrgencyEstimator for Slow {
        fn estimate(
            &self,
            _: &PatientCase,
            _: &AdherenceSummary,
            _: &TrendFindings,
        ) -> std::result::Result<UrgencyLabel, EstimatorError> {
            std::thread::sleep(Duration::from_secs(3));
            Ok(Urgent)
        }
    }

    fn stored() -> (CaseStore, CaseId) {
        let store = CaseStore::in_memory();
        let case = hypertension_case();
        let id = case.case_id.clone();
        store.put_case(case).unwrap();
        (store, id)
    }

    #[test]
    fn triage_case_persists_and_audits() {
        let (store, id) = stored();
        let config = TriageConfig::default();
        let a = triage_case(&store, &id, &config, None).unwrap();
        let b = triage_case(&store, &id, &config, None).unwrap();
        assert_eq!(a, b);
        assert_eq!(store.triage(&id), Some(a));
        let triaged = store
            .audit_events()
            .iter()
            .filter(|e| e.action == AuditAction::Triaged)
            .count();
        assert_eq!(triaged, 2);
    }

    #[test]
    fn estimator_failure_falls_back_to_rules() {
        let (store, id) = stored();
        let est: Arc<dyn UrgencyEstimator> =
            Arc::new(Fixed(Err(EstimatorError::Unavailable("connection refused".into()))));
        let r = triage_case(&store, &id, &TriageConfig::default(), Some(est)).unwrap();
        assert_eq!(r.label, Stable);
        assert_eq!(r.model_estimate, None);
        assert!(r.fired(RuleId::EstimatorFallback));
    }

    #[test]
    fn estimator_timeout_falls_back() {
        let (store, id) = stored();
        let mut config = TriageConfig::default();
        config.estimator_timeout_seconds = 1;
        let r = triage_case(&store, &id, &config, Some(Arc::new(Slow))).unwrap();
        assert_eq!(r.label, Stable);
        let fallback = r
            .rationale
            .iter()
            .find(|f| f.rule == RuleId::EstimatorFallback)
            .unwrap();
        assert!(fallback.message.contains("timed out"));
    }

    #[test]
    fn estimator_can_raise() {
        let (store, id) = stored();
        let r = triage_case(
            &store,
            &id,
            &TriageConfig::default(),
            Some(Arc::new(Fixed(Ok(Attention)))),
        )
        .unwrap();
        assert_eq!(r.label, Attention);
        assert_eq!(r.rule_floor, Stable);
    }

    #[test]
    fn unknown_case() {
        let store = CaseStore::in_memory();
        assert!(matches!(
            triage_case(&store, &CaseId::new("x"), &TriageConfig::default(), None),
            Err(crate::Error::UnknownCase(_))
        ));
    }
}
