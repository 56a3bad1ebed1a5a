use serde::{Deserialize, Serialize};

use crate::domain::{severity_max, PatientCase, UrgencyLabel};

use super::adherence::AdherenceSummary;
use super::config::TriageConfig;
use super::trends::TrendFindings;

/// Identity of each rationale entry.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RuleId {
    NoMedications,
    DeviationsUrgent,
    AdherenceUrgent,
    DeviationsAttention,
    AdherenceAttention,
    SlopeAlert,
    MissedDoseReport,
    NoRuleFired,
    ModelEstimate,
    EstimatorFallback,
    FailSafeCriticalTask,
}

impl RuleId {
    /// Plain-language name without thresholds, safe to quote in drafts.
    pub fn describe(self) -> &'static str {
        match self {
            RuleId::NoMedications => "no medications listed; adherence treated as complete",
            RuleId::DeviationsUrgent => "out-of-range readings reached the urgent count",
            RuleId::AdherenceUrgent => "overall dose adherence below the urgent cutoff",
            RuleId::DeviationsAttention => "out-of-range readings reached the attention count",
            RuleId::AdherenceAttention => "overall dose adherence below the attention cutoff",
            RuleId::SlopeAlert => "vital sign trend steeper than the alert slope",
            RuleId::MissedDoseReport => "patient reported missed doses",
            RuleId::NoRuleFired => "no triage rule fired",
            RuleId::ModelEstimate => "external model estimate applied",
            RuleId::EstimatorFallback => "external estimate unavailable; rule-based result used",
            RuleId::FailSafeCriticalTask => "critical monitoring task missed; escalated to urgent",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RuleFiring {
    pub rule: RuleId,
    /// Severity the rule asserts, if it asserts one.
    pub level: Option<UrgencyLabel>,
    /// Vital type or task id the rule concerns.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub subject: Option<String>,
    pub message: String,
}

impl RuleFiring {
    fn new(rule: RuleId, level: Option<UrgencyLabel>, message: String) -> Self {
        Self {
            rule,
            level,
            subject: None,
            message,
        }
    }

    fn about(mut self, subject: impl Into<String>) -> Self {
        self.subject = Some(subject.into());
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TriageResult {
    pub label: UrgencyLabel,
    pub rationale: Vec<RuleFiring>,
    pub failsafe_triggered: bool,
    pub missed_critical_tasks: Vec<String>,
    pub rule_floor: UrgencyLabel,
    pub model_estimate: Option<UrgencyLabel>,
    pub deviations_total: u32,
    pub adherence: AdherenceSummary,
    pub trends: TrendFindings,
}

impl TriageResult {
    pub fn fired(&self, rule: RuleId) -> bool {
        self.rationale.iter().any(|r| r.rule == rule)
    }

    pub(crate) fn note_fallback(&mut self, reason: &str) {
        self.rationale.push(RuleFiring::new(
            RuleId::EstimatorFallback,
            None,
            format!("external estimate unavailable ({reason}); rule-based classification used"),
        ));
    }
}

/// Classify one case.
///
/// The rule floor comes from deviations, adherence, slopes and dialogue
/// reports. A model estimate can raise the label but never lower it below the
/// floor. A critical task below the coverage minimum forces `urgent`.
pub fn classify(
    case: &PatientCase,
    adherence: &AdherenceSummary,
    trends: &TrendFindings,
    config: &TriageConfig,
    model_estimate: Option<UrgencyLabel>,
) -> TriageResult {
    use UrgencyLabel::*;

    let mut rationale = Vec::new();
    let deviations = trends.deviations_total();
    let rate = adherence.overall_adherence_rate;

    if !adherence.has_medications() {
        rationale.push(RuleFiring::new(
            RuleId::NoMedications,
            None,
            "no medications listed; overall adherence taken as 1.0".to_string(),
        ));
    }
    if deviations >= config.deviation_urgent_count {
        rationale.push(RuleFiring::new(
            RuleId::DeviationsUrgent,
            Some(Urgent),
            format!(
                "{deviations} out-of-range readings (urgent at {} or more)",
                config.deviation_urgent_count
            ),
        ));
    }
    if rate < config.adherence_urgent_below {
        rationale.push(RuleFiring::new(
            RuleId::AdherenceUrgent,
            Some(Urgent),
            format!(
                "overall adherence {rate:.3} below {}",
                config.adherence_urgent_below
            ),
        ));
    }
    if deviations >= config.deviation_attention_count {
        rationale.push(RuleFiring::new(
            RuleId::DeviationsAttention,
            Some(Attention),
            format!(
                "{deviations} out-of-range readings (attention at {} or more)",
                config.deviation_attention_count
            ),
        ));
    }
    if rate < config.adherence_attention_below {
        rationale.push(RuleFiring::new(
            RuleId::AdherenceAttention,
            Some(Attention),
            format!(
                "overall adherence {rate:.3} below {}",
                config.adherence_attention_below
            ),
        ));
    }
    for trend in &trends.vitals {
        let (Some(slope), Some(limit)) = (trend.slope, config.slope_threshold(trend.vital_type))
        else {
            continue;
        };
        if slope.abs() > limit {
            rationale.push(
                RuleFiring::new(
                    RuleId::SlopeAlert,
                    Some(Attention),
                    format!(
                        "{} trend {slope:+.2} {}/day exceeds {limit}",
                        trend.vital_type.label(),
                        trend.unit
                    ),
                )
                .about(trend.vital_type.slug()),
            );
        }
    }
    if adherence.missed_dose_reports >= 1 {
        rationale.push(RuleFiring::new(
            RuleId::MissedDoseReport,
            Some(Attention),
            format!(
                "{} dialogue turn(s) report missed doses",
                adherence.missed_dose_reports
            ),
        ));
    }

    let rule_floor = rationale
        .iter()
        .filter_map(|r| r.level)
        .fold(Stable, severity_max);
    if rule_floor == Stable {
        rationale.push(RuleFiring::new(
            RuleId::NoRuleFired,
            Some(Stable),
            "no deviation, adherence, trend or dialogue rule fired".to_string(),
        ));
    }

    let mut label = severity_max(rule_floor, model_estimate.unwrap_or(Stable));
    if let Some(estimate) = model_estimate {
        let effect = if estimate > rule_floor {
            "raised the label above the rule floor"
        } else {
            "did not change the rule floor"
        };
        rationale.push(RuleFiring::new(
            RuleId::ModelEstimate,
            Some(estimate),
            format!("external estimate `{estimate}` {effect}"),
        ));
    }

    let mut missed_critical_tasks = Vec::new();
    for cov in adherence.task_coverage.iter().filter(|c| c.critical) {
        if cov.coverage_ratio < config.critical_coverage_minimum {
            missed_critical_tasks.push(cov.task_id.clone());
            let description = case
                .monitoring_tasks
                .iter()
                .find(|t| t.task_id == cov.task_id)
                .map_or(cov.task_id.as_str(), |t| t.description.as_str());
            rationale.push(
                RuleFiring::new(
                    RuleId::FailSafeCriticalTask,
                    Some(Urgent),
                    format!(
                        "critical task `{}` ({description}) completed {} of {} required times; escalated to urgent",
                        cov.task_id, cov.completed_count, cov.required_count
                    ),
                )
                .about(cov.task_id.clone()),
            );
        }
    }
    let failsafe_triggered = !missed_critical_tasks.is_empty();
    if failsafe_triggered {
        label = Urgent;
    }

    TriageResult {
        label,
        rationale,
        failsafe_triggered,
        missed_critical_tasks,
        rule_floor,
        model_estimate,
        deviations_total: deviations,
        adherence: adherence.clone(),
        trends: trends.clone(),
    }
}
