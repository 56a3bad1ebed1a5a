//! Render-agnostic chart specifications paired with draft sections.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::domain::{PatientCase, VitalType};
use crate::draft::{DraftReport, Topic};
use crate::error::{Error, Result};
use crate::triage::TriageResult;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "name", rename_all = "snake_case")]
pub enum ChartSubject {
    Vital(VitalType),
    Medication(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdLine {
    pub label: String,
    pub y: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Annotation {
    pub x: f64,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChartSpec {
    pub chart_id: String,
    pub topic: Topic,
    pub subject: ChartSubject,
    /// x is days since the start of the reporting period.
    pub points: Vec<Point>,
    pub threshold_lines: Vec<ThresholdLine>,
    pub annotations: Vec<Annotation>,
    pub caption: String,
    pub empty: bool,
    /// Inclusive x range of the chart, `[0, days in period]`.
    pub x_max: f64,
}

/// Build one chart per vital series and one dose chart per medication.
///
/// Threshold lines and deviation markers use the ranges recorded in the
/// triage result, so marker counts always agree with the deviation counts.
pub fn build_charts(case: &PatientCase, triage: &TriageResult) -> Vec<ChartSpec> {
    let period = &case.reporting_period;
    let x_max = f64::from(period.days());
    let mut charts = Vec::new();

    for series in &case.vitals {
        let vital = series.vital_type;
        let points: Vec<Point> = series
            .samples_in(period)
            .map(|s| Point {
                x: period.day_offset(s.timestamp),
                y: s.value,
            })
            .collect();
        let range = triage.trends.get(vital).and_then(|t| t.range);

        let (lo_bound, hi_bound) = vital.plausible_bounds();
        let threshold_lines = range
            .map(|r| {
                [("low", r.low), ("high", r.high)]
                    .into_iter()
                    .filter(|(_, y)| (lo_bound..=hi_bound).contains(y))
                    .map(|(label, y)| ThresholdLine {
                        label: label.to_string(),
                        y,
                    })
                    .collect()
            })
            .unwrap_or_default();

        let annotations: Vec<Annotation> = match range {
            Some(r) => points
                .iter()
                .filter(|p| !r.contains(p.y))
                .map(|p| Annotation {
                    x: p.x,
                    text: if p.y > r.high {
                        "above range".to_string()
                    } else {
                        "below range".to_string()
                    },
                })
                .collect(),
            None => Vec::new(),
        };

        let name = capitalize(vital.label());
        let caption = if points.is_empty() {
            format!(
                "No {} readings were recorded between {} and {}.",
                vital.label(),
                period.start,
                period.end
            )
        } else if annotations.is_empty() {
            format!("{name} ({}) over the reporting period.", series.unit)
        } else {
            format!(
                "{name} ({}) over the reporting period; markers show readings outside the target range.",
                series.unit
            )
        };

        charts.push(ChartSpec {
            chart_id: format!("vital-{}", vital.slug()),
            topic: Topic::Vitals,
            subject: ChartSubject::Vital(vital),
            empty: points.is_empty(),
            points,
            threshold_lines,
            annotations,
            caption,
            x_max,
        });
    }

    let mut used_ids = HashSet::new();
    for (i, med) in case.medications.iter().enumerate() {
        let mut counts = vec![0u32; period.days() as usize];
        for ts in med.dose_log.iter().filter(|ts| period.contains(**ts)) {
            counts[period.day_index(*ts) as usize] += 1;
        }
        let points: Vec<Point> = counts
            .iter()
            .enumerate()
            .map(|(day, n)| Point {
                x: day as f64,
                y: f64::from(*n),
            })
            .collect();
        let annotations = points
            .iter()
            .filter(|p| p.y == 0.0)
            .map(|p| Annotation {
                x: p.x,
                text: "no doses recorded".to_string(),
            })
            .collect();

        let mut chart_id = format!("adherence-{}", slugify(&med.name));
        if !used_ids.insert(chart_id.clone()) {
            chart_id = format!("{chart_id}-{i}");
            used_ids.insert(chart_id.clone());
        }
        let caption = if med.recorded_doses == 0 {
            format!(
                "No doses of {} were recorded between {} and {}.",
                med.name, period.start, period.end
            )
        } else {
            format!(
                "Daily recorded doses of {} against the scheduled doses per day.",
                med.name
            )
        };
        charts.push(ChartSpec {
            chart_id,
            topic: Topic::Adherence,
            subject: ChartSubject::Medication(med.name.clone()),
            empty: points.is_empty(),
            points,
            threshold_lines: vec![ThresholdLine {
                label: "scheduled per day".to_string(),
                y: f64::from(med.schedule),
            }],
            annotations,
            caption,
            x_max,
        });
    }

    charts
}

/// Attach every chart to the section of its topic.
pub fn pair_charts(mut report: DraftReport, charts: &[ChartSpec]) -> Result<DraftReport> {
    let mut seen = HashSet::new();
    for chart in charts {
        if !seen.insert(chart.chart_id.as_str()) {
            return Err(Error::DuplicateChart(chart.chart_id.clone()));
        }
        if !report.sections.iter().any(|s| s.topic == chart.topic) {
            return Err(Error::TopicMismatch(chart.chart_id.clone()));
        }
    }
    for section in &mut report.sections {
        section.chart_refs = charts
            .iter()
            .filter(|c| c.topic == section.topic)
            .map(|c| c.chart_id.clone())
            .collect();
    }
    Ok(report)
}

fn slugify(name: &str) -> String {
    let mut slug = String::new();
    for c in name.chars() {
        if c.is_ascii_alphanumeric() {
            slug.push(c.to_ascii_lowercase());
        } else if !slug.ends_with('-') && !slug.is_empty() {
            slug.push('-');
        }
    }
    let slug = slug.trim_end_matches('-').to_string();
    if slug.is_empty() {
        "medication".to_string()
    } else {
        slug
    }
}

fn capitalize(s: &str) -> String {
    let mut chars = s.chars();
    match chars.next() {
        Some(first) => first.to_uppercase().chain(chars).collect(),
        None => String::new(),
    }
}
