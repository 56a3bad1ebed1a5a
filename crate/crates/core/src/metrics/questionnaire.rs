use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::Read;

use serde::{Deserialize, Serialize};

use crate::domain::{CaseId, PhysicianId};
use crate::error::{Error, Result};

use super::edit::ScopeBucket;
use super::stats::{cronbach_alpha, mean, one_sample_t_from_scores, StatResult};

pub const DIMENSIONS: usize = 12;

/// Dimension names in questionnaire order.
pub const DIMENSION_NAMES: [&str; DIMENSIONS] = [
    "Urgency assessment",
    "Intervention recommendations",
    "Critical task identification",
    "Clinical appropriateness",
    "Risk rationale",
    "Data completeness",
    "Chart information value",
    "Adherence accuracy",
    "Readiness for consultation",
    "Time effort saved",
    "Information location efficiency",
    "Overall satisfaction",
];

/// Index of the time-saving item.
pub const TIME_SAVED: usize = 9;

pub const BASELINE: f64 = 5.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SafetyFlag {
    None,
    MinorConcern,
    SafetyCritical,
}

impl std::str::FromStr for SafetyFlag {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "none" => Ok(SafetyFlag::None),
            "minor_concern" => Ok(SafetyFlag::MinorConcern),
            "safety_critical" => Ok(SafetyFlag::SafetyCritical),
            other => Err(format!("unknown safety flag `{other}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuestionnaireResponse {
    pub case_id: CaseId,
    pub physician_id: PhysicianId,
    pub scores: [u8; DIMENSIONS],
    pub editing_scope: ScopeBucket,
    pub safety_flag: SafetyFlag,
}

impl QuestionnaireResponse {
    pub fn validate(&self) -> Result<()> {
        if let Some((i, s)) = self.scores.iter().enumerate().find(|(_, s)| !(1..=10).contains(*s)) {
            return Err(Error::InvalidResponses(format!(
                "case `{}`: Q{} score {s} outside 1..=10",
                self.case_id,
                i + 1
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhysicianSummary {
    pub responses: u32,
    pub time_saved_mean: f64,
    pub time_saved_test: Option<StatResult>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub responses: u32,
    pub dimension_means: [f64; DIMENSIONS],
    pub overall_mean: f64,
    pub time_saved_test: Option<StatResult>,
    pub per_physician: BTreeMap<PhysicianId, PhysicianSummary>,
    pub scope_histogram: BTreeMap<ScopeBucket, u32>,
    pub safety_counts: BTreeMap<SafetyFlag, u32>,
    /// Absent when the score matrix is degenerate.
    pub cronbach_alpha: Option<f64>,
}

/// Unweighted mean of per-dimension means.
pub fn overall_mean(dimension_means: &[f64]) -> f64 {
    mean(dimension_means)
}

pub fn aggregate(responses: &[QuestionnaireResponse]) -> Result<Aggregate> {
    if responses.is_empty() {
        return Err(Error::InvalidResponses("no responses".into()));
    }
    for r in responses {
        r.validate()?;
    }
    let column = |j: usize, rs: &[&QuestionnaireResponse]| -> Vec<f64> {
        rs.iter().map(|r| f64::from(r.scores[j])).collect()
    };
    let all: Vec<&QuestionnaireResponse> = responses.iter().collect();
    let mut dimension_means = [0.0; DIMENSIONS];
    for (j, m) in dimension_means.iter_mut().enumerate() {
        *m = mean(&column(j, &all));
    }

    let mut by_physician: BTreeMap<PhysicianId, Vec<&QuestionnaireResponse>> = BTreeMap::new();
    for r in responses {
        by_physician.entry(r.physician_id.clone()).or_default().push(r);
    }
    let per_physician = by_physician
        .into_iter()
        .map(|(id, rs)| {
            let q = column(TIME_SAVED, &rs);
            let summary = PhysicianSummary {
                responses: rs.len() as u32,
                time_saved_mean: mean(&q),
                time_saved_test: one_sample_t_from_scores(&q, BASELINE).ok(),
            };
            (id, summary)
        })
        .collect();

    let mut scope_histogram: BTreeMap<ScopeBucket, u32> =
        ScopeBucket::ALL.into_iter().map(|b| (b, 0)).collect();
    let mut safety_counts: BTreeMap<SafetyFlag, u32> =
        [SafetyFlag::None, SafetyFlag::MinorConcern, SafetyFlag::SafetyCritical]
            .into_iter()
            .map(|f| (f, 0))
            .collect();
    for r in responses {
        *scope_histogram.entry(r.editing_scope).or_default() += 1;
        *safety_counts.entry(r.safety_flag).or_default() += 1;
    }

    let matrix: Vec<Vec<f64>> = responses
        .iter()
        .map(|r| r.scores.iter().map(|s| f64::from(*s)).collect())
        .collect();

    Ok(Aggregate {
        responses: responses.len() as u32,
        overall_mean: overall_mean(&dimension_means),
        dimension_means,
        time_saved_test: one_sample_t_from_scores(&column(TIME_SAVED, &all), BASELINE).ok(),
        per_physician,
        scope_histogram,
        safety_counts,
        cronbach_alpha: cronbach_alpha(&matrix).ok(),
    })
}

#[derive(Deserialize)]
struct CsvRow {
    case_id: String,
    physician_id: String,
    q1: u8,
    q2: u8,
    q3: u8,
    q4: u8,
    q5: u8,
    q6: u8,
    q7: u8,
    q8: u8,
    q9: u8,
    q10: u8,
    q11: u8,
    q12: u8,
    editing_scope: String,
    safety_flag: String,
}

/// Read responses from CSV with header
/// `case_id,physician_id,q1..q12,editing_scope,safety_flag`.
pub fn read_responses_csv(reader: impl Read) -> Result<Vec<QuestionnaireResponse>> {
    let mut out = Vec::new();
    let mut csv = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    for (i, row) in csv.deserialize::<CsvRow>().enumerate() {
        let line = i + 2;
        let row = row.map_err(|e| Error::InvalidResponses(format!("line {line}: {e}")))?;
        let response = QuestionnaireResponse {
            case_id: CaseId::new(row.case_id),
            physician_id: PhysicianId::new(row.physician_id),
            scores: [
                row.q1, row.q2, row.q3, row.q4, row.q5, row.q6, row.q7, row.q8, row.q9, row.q10,
                row.q11, row.q12,
            ],
            editing_scope: row
                .editing_scope
                .parse()
                .map_err(|e| Error::InvalidResponses(format!("line {line}: {e}")))?,
            safety_flag: row
                .safety_flag
                .parse()
                .map_err(|e| Error::InvalidResponses(format!("line {line}: {e}")))?,
        };
        response
            .validate()
            .map_err(|e| Error::InvalidResponses(format!("line {line}: {e}")))?;
        out.push(response);
    }
    Ok(out)
}

fn test_note(t: &Option<StatResult>) -> String {
    match t {
        Some(s) => format!("  (t({}) = {:.2}, p = {:.3})", s.df, s.t, s.p_two_sided),
        None => String::new(),
    }
}

/// Plain-text results table: quality dimensions, reviewer variability, safety.
pub fn render_table(agg: &Aggregate) -> String {
    let mut s = String::new();
    let n = agg.responses;
    let _ = writeln!(s, "Metric                                       Result");
    let _ = writeln!(s, "Quality (1-10, baseline = 5)");
    for (i, (name, m)) in DIMENSION_NAMES.iter().zip(agg.dimension_means).enumerate() {
        let label = if i == TIME_SAVED {
            format!("{name} (Q{}; overall)", i + 1)
        } else {
            format!("{name} (Q{})", i + 1)
        };
        let note = if i == TIME_SAVED { test_note(&agg.time_saved_test) } else { String::new() };
        let _ = writeln!(s, "  {label:<43}{m:.2}{note}");
    }
    let _ = writeln!(s, "Physician variability");
    for (id, p) in &agg.per_physician {
        let label = format!("Q{} ({id})", TIME_SAVED + 1);
        let _ = writeln!(s, "  {label:<43}{:.2}{}", p.time_saved_mean, test_note(&p.time_saved_test));
    }
    let _ = writeln!(s, "  {:<43}{:.2}", "Overall mean (Q1-Q12)", agg.overall_mean);
    if let Some(a) = agg.cronbach_alpha {
        let _ = writeln!(s, "  {:<43}{a:.2}", "Cronbach's alpha");
    }
    let _ = writeln!(s, "Safety");
    let count = |f: SafetyFlag| agg.safety_counts.get(&f).copied().unwrap_or(0);
    let _ = writeln!(s, "  {:<43}{}/{n}", "Minor concerns", count(SafetyFlag::MinorConcern));
    let _ = writeln!(s, "  {:<43}{}/{n}", "Safety-critical issues", count(SafetyFlag::SafetyCritical));
    let _ = writeln!(s, "Editing scope");
    for (b, c) in &agg.scope_histogram {
        let _ = writeln!(s, "  {:<43}{c}/{n}", b.as_str());
    }
    s
}
