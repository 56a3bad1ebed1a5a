//! Deterministic template drafts.
//!
//! Every number written here is a count or value copied from the case or from
//! the triage summaries; nothing is rounded into a new quantity.

use crate::charts::{pair_charts, ChartSpec};
use crate::domain::{AdherenceSignal, PatientCase, Speaker, Timestamp, UrgencyLabel};
use crate::error::Result;
use crate::triage::{RuleId, TriageResult};

use super::gaps::{detect_gaps, topic_is_empty};
use super::{DraftReport, DraftSection, GeneratorConfig, Moves, Origin, Topic};

const MAX_HIGHLIGHTS: usize = 5;

/// Integral values without decimals, others with one decimal.
pub fn fmt_number(v: f64) -> String {
    let v = if v == 0.0 { 0.0 } else { v };
    if (v - v.round()).abs() < 1e-9 {
        format!("{:.0}", v)
    } else {
        format!("{:.1}", v)
    }
}

fn plural(n: u32, one: &str, many: &str) -> String {
    if n == 1 {
        format!("{n} {one}")
    } else {
        format!("{n} {many}")
    }
}

fn capitalize(s: &str) -> String {
    let mut chars = s.chars();
    match chars.next() {
        Some(first) => first.to_uppercase().chain(chars).collect(),
        None => String::new(),
    }
}

fn join_sentences(parts: &[String]) -> String {
    parts.join(" ")
}

pub fn generate_template_draft(
    case: &PatientCase,
    triage: &TriageResult,
    charts: &[ChartSpec],
    generated_at: Timestamp,
) -> Result<DraftReport> {
    let gaps = detect_gaps(case);
    let sections = Topic::ORDER
        .into_iter()
        .map(|topic| {
            let gap_statements = gaps.get(&topic).cloned().unwrap_or_default();
            DraftSection {
                section_id: topic.section_id().to_string(),
                topic,
                moves: template_moves(case, triage, topic, &gap_statements),
                gap_statements,
                chart_refs: Vec::new(),
                origin: Origin::Template,
            }
        })
        .collect();
    let report = DraftReport {
        case_id: case.case_id.clone(),
        sections,
        urgency: triage.label,
        generated_at,
        generator_config_digest: GeneratorConfig::default().digest(),
    };
    pair_charts(report, charts)
}

pub(crate) fn template_moves(
    case: &PatientCase,
    triage: &TriageResult,
    topic: Topic,
    gaps: &[String],
) -> Moves {
    if topic_is_empty(case, topic) {
        return empty_topic_moves(topic, gaps);
    }
    match topic {
        Topic::Medications => medications(case, gaps),
        Topic::Vitals => vitals(triage, gaps),
        Topic::Adherence => adherence(case, triage, gaps),
        Topic::DialogueHighlights => dialogue(case, gaps),
        Topic::Plan => plan(case, triage),
    }
}

fn empty_topic_moves(topic: Topic, gaps: &[String]) -> Moves {
    let what_happened = join_sentences(gaps);
    let (why, what) = match topic {
        Topic::Medications => (
            "Without a medication list, adherence and treatment effect cannot be assessed.",
            "Reconcile the medication list with the patient before approving.",
        ),
        Topic::Vitals => (
            "Without home readings, control over this period cannot be judged from device data.",
            "Ask the patient to resume home readings and check that the device is working.",
        ),
        Topic::Adherence => (
            "Without a dose schedule or monitoring plan, adherence cannot be assessed for this period.",
            "Confirm the current regimen and monitoring plan with the patient.",
        ),
        Topic::DialogueHighlights => (
            "Without dialogue, the patient's own account of adherence is unavailable.",
            "Ask about adherence and side effects at the next contact.",
        ),
        Topic::Plan => ("", ""),
    };
    Moves::new(what_happened, why, what)
}

fn medications(case: &PatientCase, gaps: &[String]) -> Moves {
    let listed: Vec<String> = case
        .medications
        .iter()
        .map(|m| format!("{} {}, {} per day", m.name, m.dose, plural(m.schedule, "dose", "doses")))
        .collect();
    let mut parts = vec![format!("Listed medications: {}.", listed.join("; "))];

    let refills: Vec<String> = case
        .medications
        .iter()
        .flat_map(|m| m.refill_dates.iter().map(move |d| format!("{} on {d}", m.name)))
        .collect();
    if refills.is_empty() {
        parts.push("No refills were recorded in this period.".to_string());
    } else {
        parts.push(format!("Refills recorded: {}.", refills.join(", ")));
    }
    parts.extend(gaps.iter().cloned());

    Moves::new(
        join_sentences(&parts),
        "The medication list anchors the adherence figures and any dose change discussed below.",
        "Confirm each medication and dose with the patient before approving.",
    )
}

fn vitals(triage: &TriageResult, gaps: &[String]) -> Moves {
    let mut parts = Vec::new();
    for t in triage.trends.vitals.iter().filter(|t| t.sample_count > 0) {
        let mut s = format!(
            "{}: {} in {}",
            capitalize(t.vital_type.label()),
            plural(t.sample_count, "reading", "readings"),
            t.unit
        );
        if let Some(last) = t.last_value {
            s.push_str(&format!(", latest {}", fmt_number(last)));
        }
        if let Some(r) = t.range {
            s.push_str(&format!(
                ", {} outside the target range of {} to {}",
                t.deviation_count,
                fmt_number(r.low),
                fmt_number(r.high)
            ));
        }
        match t.slope {
            Some(slope) if slope.abs() >= 0.05 => {
                let dir = if slope > 0.0 { "rising" } else { "falling" };
                s.push_str(&format!(", {dir} by {:.1} {} per day", slope.abs(), t.unit));
            }
            Some(_) => s.push_str(", with no clear trend"),
            None => s.push_str(", too few readings for a trend"),
        }
        s.push('.');
        parts.push(s);
    }
    parts.extend(gaps.iter().cloned());

    let slope_alert = triage.fired(RuleId::SlopeAlert);
    let (why, mut what) = if triage.deviations_total > 0 {
        (
            "Readings outside the target range suggest the condition is not fully controlled.",
            "Review the out-of-range readings with the patient and consider whether therapy needs adjusting.".to_string(),
        )
    } else if slope_alert {
        (
            "A steady drift can signal a change in control before readings leave the target range.",
            "Watch the trend closely at the next contact.".to_string(),
        )
    } else {
        (
            "Readings stayed within the target range over the period.",
            "Continue routine home monitoring.".to_string(),
        )
    };
    if !gaps.is_empty() {
        what.push_str(" Ask the patient to resume the missing readings.");
    }
    Moves::new(join_sentences(&parts), why, what)
}

fn adherence(case: &PatientCase, triage: &TriageResult, gaps: &[String]) -> Moves {
    let a = &triage.adherence;
    let mut parts = Vec::new();
    for m in a.medications.iter().filter(|m| m.recorded_doses > 0) {
        parts.push(format!(
            "{}: {} of {} expected doses recorded.",
            m.name, m.recorded_doses, m.expected_doses
        ));
    }
    if a.has_medications() {
        let mut s = format!(
            "Overall, {} of {} expected doses were recorded over the {}-day period",
            a.total_recorded_doses, a.total_expected_doses, a.days_in_period
        );
        if a.gap_days > 0 {
            s.push_str(&format!(", with {} without any recorded dose", plural(a.gap_days, "day", "days")));
        }
        s.push('.');
        parts.push(s);
    }
    for cov in a.task_coverage.iter().filter(|c| c.completed_count > 0) {
        let description = case
            .monitoring_tasks
            .iter()
            .find(|t| t.task_id == cov.task_id)
            .map_or(cov.task_id.as_str(), |t| t.description.as_str());
        parts.push(format!(
            "{}: {} of {} required completions{}.",
            capitalize(description),
            cov.completed_count,
            cov.required_count,
            if cov.critical { " (critical task)" } else { "" }
        ));
    }
    if a.missed_dose_reports > 0 {
        parts.push(format!(
            "The patient reported missed doses in {}.",
            plural(a.missed_dose_reports, "dialogue turn", "dialogue turns")
        ));
    }
    parts.extend(gaps.iter().cloned());

    let low = triage.fired(RuleId::AdherenceAttention) || a.missed_dose_reports > 0;
    let (why, what) = if triage.failsafe_triggered {
        (
            "A missed critical monitoring task leaves a time-sensitive risk unobserved.",
            "Contact the patient about the missed monitoring and agree how the task will be completed.",
        )
    } else if low {
        (
            "Missed doses weaken the treatment effect and raise the risk of avoidable complications.",
            "Discuss barriers to taking doses as scheduled.",
        )
    } else {
        (
            "Doses and monitoring tasks were largely completed as scheduled.",
            "Reinforce the current routine.",
        )
    };
    Moves::new(join_sentences(&parts), why, what)
}

fn dialogue(case: &PatientCase, gaps: &[String]) -> Moves {
    let flagged: Vec<_> = case
        .dialogue
        .iter()
        .filter(|t| t.speaker == Speaker::Patient && t.adherence_signal != AdherenceSignal::None)
        .collect();
    let mut parts = Vec::new();
    if flagged.is_empty() {
        parts.push("No adherence concerns were raised in the dialogue.".to_string());
    }
    for turn in flagged.iter().take(MAX_HIGHLIGHTS) {
        let what = match turn.adherence_signal {
            AdherenceSignal::ReportedMissedDose => "reported a missed dose",
            AdherenceSignal::ReportedSideEffect => "reported a side effect",
            AdherenceSignal::ReportedAdherent => "reported taking doses as prescribed",
            AdherenceSignal::None => continue,
        };
        parts.push(format!(
            "On {} the patient {what}: \"{}\"",
            turn.timestamp.date(),
            turn.text.trim()
        ));
    }
    parts.extend(gaps.iter().cloned());

    let has = |s: AdherenceSignal| flagged.iter().any(|t| t.adherence_signal == s);
    let (why, what) = if has(AdherenceSignal::ReportedSideEffect) {
        (
            "Reported side effects can explain missed doses and may call for a treatment change.",
            "Ask about the side effects and whether they affect dosing.",
        )
    } else if has(AdherenceSignal::ReportedMissedDose) {
        (
            "The patient's own account supports the adherence gaps in the dose records.",
            "Explore the reasons for the missed doses with the patient.",
        )
    } else if has(AdherenceSignal::ReportedAdherent) {
        (
            "The patient's account is consistent with the recorded doses.",
            "No dialogue follow-up is needed beyond routine contact.",
        )
    } else {
        (
            "Dialogue gives context that device data cannot.",
            "No dialogue follow-up is needed beyond routine contact.",
        )
    };
    Moves::new(join_sentences(&parts), why, what)
}

fn plan(case: &PatientCase, triage: &TriageResult) -> Moves {
    let mut parts = vec![format!("Triage label: {}.", triage.label)];
    let mut fired: Vec<&str> = Vec::new();
    for f in &triage.rationale {
        if matches!(f.rule, RuleId::NoRuleFired | RuleId::FailSafeCriticalTask) {
            continue;
        }
        let d = f.rule.describe();
        if !fired.contains(&d) {
            fired.push(d);
        }
    }
    if fired.is_empty() && !triage.failsafe_triggered {
        parts.push("No triage rule fired.".to_string());
    } else {
        parts.push(format!("Rules that fired: {}.", fired.join("; ")));
    }
    for task_id in &triage.missed_critical_tasks {
        let Some(cov) = triage.adherence.coverage(task_id) else {
            continue;
        };
        let description = case
            .monitoring_tasks
            .iter()
            .find(|t| &t.task_id == task_id)
            .map_or(task_id.as_str(), |t| t.description.as_str());
        parts.push(format!(
            "Fail-safe escalation: {description} was completed {} of {} required times.",
            cov.completed_count, cov.required_count
        ));
    }

    let (why, what) = match triage.label {
        UrgencyLabel::Urgent => (
            "The findings call for prompt clinical contact.",
            "Contact the patient promptly and review therapy.",
        ),
        UrgencyLabel::Attention => (
            "The findings merit review before the next routine visit.",
            "Review the findings with the patient at an early follow-up.",
        ),
        UrgencyLabel::Stable => (
            "No finding suggests a change in care is needed now.",
            "Continue the current plan.",
        ),
    };
    Moves::new(
        join_sentences(&parts),
        why,
        format!("{what} Confirm the medication list and choose a follow-up interval before approving."),
    )
}
