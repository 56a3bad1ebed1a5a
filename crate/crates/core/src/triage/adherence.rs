use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::domain::{AdherenceSignal, PatientCase};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MedicationAdherence {
    pub name: String,
    pub expected_doses: u32,
    pub recorded_doses: u32,
    /// `recorded / expected`; above 1 for over-use.
    pub adherence_rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskCoverage {
    pub task_id: String,
    pub critical: bool,
    pub required_count: u32,
    pub completed_count: u32,
    pub coverage_ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdherenceSummary {
    pub days_in_period: u32,
    pub medications: Vec<MedicationAdherence>,
    pub total_expected_doses: u32,
    pub total_recorded_doses: u32,
    /// Dose-weighted mean of per-medication rates, clamped to `[0, 1]`.
    /// Defined as 1.0 when the case lists no medications.
    pub overall_adherence_rate: f64,
    /// Days in the period on which no dose of any medication was logged.
    pub gap_days: u32,
    pub missed_dose_reports: u32,
    pub side_effect_reports: u32,
    /// One entry per monitoring task, in case order.
    pub task_coverage: Vec<TaskCoverage>,
}

impl AdherenceSummary {
    pub fn coverage(&self, task_id: &str) -> Option<&TaskCoverage> {
        self.task_coverage.iter().find(|t| t.task_id == task_id)
    }

    pub fn has_medications(&self) -> bool {
        !self.medications.is_empty()
    }
}

pub fn summarize_adherence(case: &PatientCase) -> AdherenceSummary {
    let period = &case.reporting_period;
    let days = period.days();

    let medications: Vec<MedicationAdherence> = case
        .medications
        .iter()
        .map(|m| {
            let expected = m.expected_doses(period);
            MedicationAdherence {
                name: m.name.clone(),
                expected_doses: expected,
                recorded_doses: m.recorded_doses,
                adherence_rate: if expected == 0 {
                    1.0
                } else {
                    f64::from(m.recorded_doses) / f64::from(expected)
                },
            }
        })
        .collect();

    let total_expected: u32 = medications.iter().map(|m| m.expected_doses).sum();
    let total_recorded: u32 = medications.iter().map(|m| m.recorded_doses).sum();
    // Weighting each rate by its expected count reduces to the ratio of totals.
    let overall = if total_expected == 0 {
        1.0
    } else {
        (f64::from(total_recorded) / f64::from(total_expected)).clamp(0.0, 1.0)
    };

    let gap_days = if case.medications.is_empty() {
        0
    } else {
        let dosed: HashSet<i64> = case
            .medications
            .iter()
            .flat_map(|m| m.dose_log.iter())
            .filter(|ts| period.contains(**ts))
            .map(|ts| period.day_index(*ts))
            .collect();
        days - dosed.len() as u32
    };

    let count_signal = |signal: AdherenceSignal| {
        case.dialogue
            .iter()
            .filter(|t| t.adherence_signal == signal)
            .count() as u32
    };

    let task_coverage = case
        .monitoring_tasks
        .iter()
        .map(|task| {
            let required = task.required_frequency.required_over(days);
            let completed = task
                .completion_timestamps
                .iter()
                .filter(|ts| period.contains(**ts))
                .count() as u32;
            TaskCoverage {
                task_id: task.task_id.clone(),
                critical: task.critical,
                required_count: required,
                completed_count: completed,
                coverage_ratio: f64::from(completed) / f64::from(required),
            }
        })
        .collect();

    AdherenceSummary {
        days_in_period: days,
        medications,
        total_expected_doses: total_expected,
        total_recorded_doses: total_recorded,
        overall_adherence_rate: overall,
        gap_days,
        missed_dose_reports: count_signal(AdherenceSignal::ReportedMissedDose),
        side_effect_reports: count_signal(AdherenceSignal::ReportedSideEffect),
        task_coverage,
    }
}
