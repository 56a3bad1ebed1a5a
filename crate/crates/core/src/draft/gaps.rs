use std::collections::BTreeMap;

use crate::domain::PatientCase;

use super::Topic;

/// Explicit statements for every expected data element that is absent.
///
/// A fully populated case yields an empty map.
pub fn detect_gaps(case: &PatientCase) -> BTreeMap<Topic, Vec<String>> {
    let period = &case.reporting_period;
    let between = format!("between {} and {}", period.start, period.end);
    let mut gaps: BTreeMap<Topic, Vec<String>> = BTreeMap::new();
    let mut add = |topic: Topic, text: String| gaps.entry(topic).or_default().push(text);

    if case.medications.is_empty() {
        add(Topic::Medications, format!("No medications were recorded {between}."));
    }

    if case.vitals.is_empty() {
        add(Topic::Vitals, format!("No vital sign readings were recorded {between}."));
    }
    for series in &case.vitals {
        if series.samples_in(period).next().is_none() {
            add(
                Topic::Vitals,
                format!("No {} readings were recorded {between}.", series.vital_type.label()),
            );
        }
    }

    if case.medications.is_empty() && case.monitoring_tasks.is_empty() {
        add(
            Topic::Adherence,
            format!("No medication doses or monitoring tasks were scheduled {between}."),
        );
    }
    for med in &case.medications {
        if med.recorded_doses == 0 {
            add(Topic::Adherence, format!("No doses of {} were recorded {between}.", med.name));
        }
    }
    for task in &case.monitoring_tasks {
        let completed = task
            .completion_timestamps
            .iter()
            .filter(|ts| period.contains(**ts))
            .count();
        if completed == 0 {
            add(
                Topic::Adherence,
                format!("No completions of {} were recorded {between}.", task.description),
            );
        }
    }

    if case.dialogue.is_empty() {
        add(Topic::DialogueHighlights, format!("No patient dialogue was recorded {between}."));
    }

    gaps
}

/// True when the topic has no usable data at all, so the section must be
/// gap statements plus non-numeric guidance only.
pub(crate) fn topic_is_empty(case: &PatientCase, topic: Topic) -> bool {
    let period = &case.reporting_period;
    match topic {
        Topic::Medications => case.medications.is_empty(),
        Topic::Vitals => case.vitals.iter().all(|s| s.samples_in(period).next().is_none()),
        Topic::Adherence => case.medications.is_empty() && case.monitoring_tasks.is_empty(),
        Topic::DialogueHighlights => case.dialogue.is_empty(),
        Topic::Plan => false,
    }
}
