//! Shared domain types for a single reporting period of one patient.
//!
//! Everything here is a plain value: no I/O, no interior mutability. Parsing
//! and persistence live in [`crate::ingestion`].

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use chrono::{NaiveDate, NaiveDateTime, NaiveTime, Timelike};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

const SECONDS_PER_DAY: f64 = 86_400.0;

// ---------------------------------------------------------------------------
// Identifiers and time
// ---------------------------------------------------------------------------

/// Opaque case identifier.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CaseId(String);

impl CaseId {
    pub fn new(id: impl Into<String>) -> Self {
        Self(id.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    /// True when the id is usable as a file stem and an audit-log field.
    pub fn is_path_safe(&self) -> bool {
        is_safe_token(&self.0)
    }
}

impl fmt::Display for CaseId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for CaseId {
    fn from(s: &str) -> Self {
        Self(s.to_string())
    }
}

/// Identifier of the reviewing physician.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PhysicianId(String);

impl PhysicianId {
    pub fn new(id: impl Into<String>) -> Self {
        Self(id.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    pub fn is_valid(&self) -> bool {
        is_safe_token(&self.0)
    }
}

impl fmt::Display for PhysicianId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

pub(crate) fn is_safe_token(s: &str) -> bool {
    !s.is_empty()
        && s.len() <= 128
        && s
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || matches!(c, '-' | '_' | '.'))
        && !s.starts_with('.')
}

/// Seconds-resolution, timezone-naive timestamp.
///
/// Written as RFC 3339 with a `Z` suffix. Offsets other than `Z` are accepted
/// on input and folded into local wall-clock time.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Timestamp(NaiveDateTime);

impl Timestamp {
    pub fn new(dt: NaiveDateTime) -> Self {
        Self(dt.with_nanosecond(0).unwrap_or(dt))
    }

    pub fn at(date: NaiveDate, hour: u32, minute: u32, second: u32) -> Self {
        let time = NaiveTime::from_hms_opt(hour, minute, second).unwrap_or(NaiveTime::MIN);
        Self(date.and_time(time))
    }

    pub fn now() -> Self {
        Self::new(chrono::Utc::now().naive_utc())
    }

    pub fn date(&self) -> NaiveDate {
        self.0.date()
    }

    pub fn naive(&self) -> NaiveDateTime {
        self.0
    }
}

impl fmt::Display for Timestamp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0.format("%Y-%m-%dT%H:%M:%SZ"))
    }
}

impl FromStr for Timestamp {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if let Ok(dt) = chrono::DateTime::parse_from_rfc3339(s) {
            return Ok(Self::new(dt.naive_local()));
        }
        NaiveDateTime::parse_from_str(s, "%Y-%m-%dT%H:%M:%S")
            .map(Self::new)
            .map_err(|_| format!("invalid RFC 3339 timestamp `{s}`"))
    }
}

impl Serialize for Timestamp {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Timestamp {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Inclusive calendar-date range covered by one report.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReportingPeriod {
    pub start: NaiveDate,
    pub end: NaiveDate,
}

impl ReportingPeriod {
    pub fn new(start: NaiveDate, end: NaiveDate) -> Self {
        Self { start, end }
    }

    /// Number of calendar days, counting both endpoints. Zero for an inverted period.
    pub fn days(&self) -> u32 {
        let span = (self.end - self.start).num_days() + 1;
        span.max(0) as u32
    }

    pub fn contains(&self, ts: Timestamp) -> bool {
        let d = ts.date();
        self.start <= d && d <= self.end
    }

    pub fn contains_date(&self, d: NaiveDate) -> bool {
        self.start <= d && d <= self.end
    }

    /// Fractional days since the start of the period (midnight of `start`).
    pub fn day_offset(&self, ts: Timestamp) -> f64 {
        let start = self.start.and_time(NaiveTime::MIN);
        (ts.naive() - start).num_seconds() as f64 / SECONDS_PER_DAY
    }

    /// Whole-day index of a timestamp within the period.
    pub fn day_index(&self, ts: Timestamp) -> i64 {
        (ts.date() - self.start).num_days()
    }

    pub fn dates(&self) -> impl Iterator<Item = NaiveDate> + '_ {
        self.start.iter_days().take(self.days() as usize)
    }
}

// ---------------------------------------------------------------------------
// Patient data
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sex {
    Female,
    Male,
    Other,
    Unknown,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Patient {
    pub age: u32,
    pub sex: Sex,
}

/// A chronic condition, referenced by slug (`hypertension`, `type2_diabetes`, ...).
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ConditionRef(String);

impl ConditionRef {
    pub fn new(slug: impl Into<String>) -> Self {
        Self(slug.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    /// Human-readable form: underscores become spaces.
    pub fn display_name(&self) -> String {
        self.0.replace('_', " ")
    }
}

impl fmt::Display for ConditionRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for ConditionRef {
    fn from(s: &str) -> Self {
        Self(s.to_string())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MedicationRecord {
    pub name: String,
    pub dose: String,
    /// Doses per day.
    pub schedule: u32,
    #[serde(default)]
    pub refill_dates: Vec<NaiveDate>,
    pub recorded_doses: u32,
    /// One timestamp per recorded dose; its length always equals `recorded_doses`.
    #[serde(default)]
    pub dose_log: Vec<Timestamp>,
}

impl MedicationRecord {
    pub fn expected_doses(&self, period: &ReportingPeriod) -> u32 {
        self.schedule.saturating_mul(period.days())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VitalType {
    SystolicBp,
    DiastolicBp,
    Glucose,
    HeartRate,
    Weight,
}

impl VitalType {
    pub const ALL: [VitalType; 5] = [
        VitalType::SystolicBp,
        VitalType::DiastolicBp,
        VitalType::Glucose,
        VitalType::HeartRate,
        VitalType::Weight,
    ];

    pub fn slug(self) -> &'static str {
        match self {
            VitalType::SystolicBp => "systolic_bp",
            VitalType::DiastolicBp => "diastolic_bp",
            VitalType::Glucose => "glucose",
            VitalType::HeartRate => "heart_rate",
            VitalType::Weight => "weight",
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            VitalType::SystolicBp => "systolic blood pressure",
            VitalType::DiastolicBp => "diastolic blood pressure",
            VitalType::Glucose => "glucose",
            VitalType::HeartRate => "heart rate",
            VitalType::Weight => "weight",
        }
    }

    /// Axis range a chart of this vital can sensibly show.
    pub fn plausible_bounds(self) -> (f64, f64) {
        match self {
            VitalType::SystolicBp => (40.0, 300.0),
            VitalType::DiastolicBp => (20.0, 200.0),
            VitalType::Glucose => (10.0, 1000.0),
            VitalType::HeartRate => (20.0, 250.0),
            VitalType::Weight => (1.0, 500.0),
        }
    }
}

impl fmt::Display for VitalType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.slug())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VitalSample {
    pub timestamp: Timestamp,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VitalSeries {
    pub vital_type: VitalType,
    pub unit: String,
    pub samples: Vec<VitalSample>,
}

impl VitalSeries {
    pub fn samples_in<'a>(
        &'a self,
        period: &'a ReportingPeriod,
    ) -> impl Iterator<Item = &'a VitalSample> + 'a {
        self.samples.iter().filter(move |s| period.contains(s.timestamp))
    }
}

/// Occurrences per day as an exact positive rational.
///
/// Serialized as a bare integer when whole, otherwise as `"n/d"`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Frequency {
    numerator: u32,
    denominator: u32,
}

impl Frequency {
    pub fn new(numerator: u32, denominator: u32) -> Self {
        Self {
            numerator,
            denominator,
        }
    }

    pub fn per_day(n: u32) -> Self {
        Self::new(n, 1)
    }

    pub fn numerator(&self) -> u32 {
        self.numerator
    }

    pub fn denominator(&self) -> u32 {
        self.denominator
    }

    pub fn is_positive(&self) -> bool {
        self.numerator > 0 && self.denominator > 0
    }

    /// `ceil(frequency × days)`, floored at one occurrence.
    pub fn required_over(&self, days: u32) -> u32 {
        if self.denominator == 0 {
            return 1;
        }
        let num = u64::from(self.numerator) * u64::from(days);
        let den = u64::from(self.denominator);
        (num.div_ceil(den)).clamp(1, u64::from(u32::MAX)) as u32
    }

    pub fn as_f64(&self) -> f64 {
        f64::from(self.numerator) / f64::from(self.denominator)
    }
}

impl fmt::Display for Frequency {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.denominator == 1 {
            write!(f, "{}", self.numerator)
        } else {
            write!(f, "{}/{}", self.numerator, self.denominator)
        }
    }
}

impl FromStr for Frequency {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || format!("invalid frequency `{s}`, expected `n` or `n/d`");
        match s.split_once('/') {
            Some((n, d)) => Ok(Self::new(
                n.trim().parse().map_err(|_| bad())?,
                d.trim().parse().map_err(|_| bad())?,
            )),
            None => Ok(Self::per_day(s.trim().parse().map_err(|_| bad())?)),
        }
    }
}

impl Serialize for Frequency {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        if self.denominator == 1 {
            serializer.serialize_u32(self.numerator)
        } else {
            serializer.collect_str(self)
        }
    }
}

impl<'de> Deserialize<'de> for Frequency {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Whole(u32),
            Text(String),
        }
        match Raw::deserialize(deserializer) {
            Ok(Raw::Whole(n)) => Ok(Self::per_day(n)),
            Ok(Raw::Text(s)) => s.parse().map_err(serde::de::Error::custom),
            Err(_) => Err(serde::de::Error::custom(
                "expected a whole number or an `n/d` string",
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonitoringTask {
    pub task_id: String,
    pub condition: ConditionRef,
    pub description: String,
    pub required_frequency: Frequency,
    pub critical: bool,
    #[serde(default)]
    pub completion_timestamps: Vec<Timestamp>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Speaker {
    Patient,
    Clinician,
    System,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AdherenceSignal {
    ReportedMissedDose,
    ReportedSideEffect,
    ReportedAdherent,
    #[default]
    None,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DialogueTurn {
    pub speaker: Speaker,
    pub timestamp: Timestamp,
    pub text: String,
    #[serde(default)]
    pub adherence_signal: AdherenceSignal,
}

/// Unified per-patient bundle for one reporting period.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PatientCase {
    pub case_id: CaseId,
    pub patient: Patient,
    pub conditions: Vec<ConditionRef>,
    pub medications: Vec<MedicationRecord>,
    pub vitals: Vec<VitalSeries>,
    pub dialogue: Vec<DialogueTurn>,
    pub monitoring_tasks: Vec<MonitoringTask>,
    pub reporting_period: ReportingPeriod,
}

impl PatientCase {
    pub fn has_condition(&self, condition: &ConditionRef) -> bool {
        self.conditions.contains(condition)
    }

    pub fn vital(&self, vital_type: VitalType) -> Option<&VitalSeries> {
        self.vitals.iter().find(|v| v.vital_type == vital_type)
    }
}

// ---------------------------------------------------------------------------
// Urgency
// ---------------------------------------------------------------------------

/// Case urgency. The derived order is the severity order.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default, Serialize, Deserialize,
)]
#[serde(rename_all = "snake_case")]
pub enum UrgencyLabel {
    #[default]
    Stable,
    Attention,
    Urgent,
}

impl UrgencyLabel {
    pub const ALL: [UrgencyLabel; 3] = [
        UrgencyLabel::Stable,
        UrgencyLabel::Attention,
        UrgencyLabel::Urgent,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            UrgencyLabel::Stable => "stable",
            UrgencyLabel::Attention => "attention",
            UrgencyLabel::Urgent => "urgent",
        }
    }

    /// Badge color used by every rendering surface.
    pub fn badge_color(self) -> &'static str {
        match self {
            UrgencyLabel::Stable => "green",
            UrgencyLabel::Attention => "amber",
            UrgencyLabel::Urgent => "red",
        }
    }
}

impl fmt::Display for UrgencyLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for UrgencyLabel {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "stable" => Ok(UrgencyLabel::Stable),
            "attention" => Ok(UrgencyLabel::Attention),
            "urgent" => Ok(UrgencyLabel::Urgent),
            other => Err(format!("unknown urgency label `{other}`")),
        }
    }
}

/// The higher-severity of two labels.
pub fn severity_max(a: UrgencyLabel, b: UrgencyLabel) -> UrgencyLabel {
    a.max(b)
}

// ---------------------------------------------------------------------------
// Validation
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationIssue {
    /// Field path such as `vitals[0].samples`.
    pub path: String,
    pub rule: String,
}

impl ValidationIssue {
    fn new(path: impl Into<String>, rule: impl Into<String>) -> Self {
        Self {
            path: path.into(),
            rule: rule.into(),
        }
    }
}

impl fmt::Display for ValidationIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.path, self.rule)
    }
}

/// Check every structural invariant of a case. An empty list means valid.
pub fn validate_case(case: &PatientCase) -> Vec<ValidationIssue> {
    let mut issues = Vec::new();
    let period = &case.reporting_period;

    if case.case_id.as_str().trim().is_empty() {
        issues.push(ValidationIssue::new("case_id", "must be non-empty"));
    }
    if period.start > period.end {
        issues.push(ValidationIssue::new(
            "reporting_period",
            "start must not be after end",
        ));
    }

    for (i, med) in case.medications.iter().enumerate() {
        if med.schedule == 0 {
            issues.push(ValidationIssue::new(
                format!("medications[{i}].schedule"),
                "doses per day must be positive",
            ));
        }
        if med.dose_log.len() != med.recorded_doses as usize {
            issues.push(ValidationIssue::new(
                format!("medications[{i}].dose_log"),
                "must hold exactly recorded_doses entries",
            ));
        }
        if let Some(j) = med.dose_log.iter().position(|ts| !period.contains(*ts)) {
            issues.push(ValidationIssue::new(
                format!("medications[{i}].dose_log[{j}]"),
                "must lie within the reporting period",
            ));
        }
        if med.dose_log.windows(2).any(|w| w[0] > w[1]) {
            issues.push(ValidationIssue::new(
                format!("medications[{i}].dose_log"),
                "must be sorted ascending",
            ));
        }
    }

    let mut seen_vitals = HashSet::new();
    for (i, series) in case.vitals.iter().enumerate() {
        if !seen_vitals.insert(series.vital_type) {
            issues.push(ValidationIssue::new(
                format!("vitals[{i}].vital_type"),
                "each vital type may appear once",
            ));
        }
        if series.unit.trim().is_empty() {
            issues.push(ValidationIssue::new(
                format!("vitals[{i}].unit"),
                "must be non-empty",
            ));
        }
        if series
            .samples
            .windows(2)
            .any(|w| w[0].timestamp >= w[1].timestamp)
        {
            issues.push(ValidationIssue::new(
                format!("vitals[{i}].samples"),
                "timestamps must be strictly ascending",
            ));
        }
        if let Some(j) = series.samples.iter().position(|s| !s.value.is_finite()) {
            issues.push(ValidationIssue::new(
                format!("vitals[{i}].samples[{j}].value"),
                "must be finite",
            ));
        }
        if let Some(j) = series
            .samples
            .iter()
            .position(|s| s.timestamp.date() > period.end)
        {
            issues.push(ValidationIssue::new(
                format!("vitals[{i}].samples[{j}].timestamp"),
                "must not be after the reporting period end",
            ));
        }
    }

    let mut seen_tasks = HashSet::new();
    for (j, task) in case.monitoring_tasks.iter().enumerate() {
        if task.task_id.trim().is_empty() || !seen_tasks.insert(task.task_id.as_str()) {
            issues.push(ValidationIssue::new(
                format!("monitoring_tasks[{j}].task_id"),
                "must be non-empty and unique",
            ));
        }
        if !case.has_condition(&task.condition) {
            issues.push(ValidationIssue::new(
                format!("monitoring_tasks[{j}].condition"),
                "must reference a condition listed in conditions",
            ));
        }
        if !task.required_frequency.is_positive() {
            issues.push(ValidationIssue::new(
                format!("monitoring_tasks[{j}].required_frequency"),
                "must be positive",
            ));
        }
        if let Some(k) = task
            .completion_timestamps
            .iter()
            .position(|ts| !period.contains(*ts))
        {
            issues.push(ValidationIssue::new(
                format!("monitoring_tasks[{j}].completion_timestamps[{k}]"),
                "must lie within the reporting period",
            ));
        }
    }

    for (k, turn) in case.dialogue.iter().enumerate() {
        if turn.text.trim().is_empty() {
            issues.push(ValidationIssue::new(
                format!("dialogue[{k}].text"),
                "must be non-empty",
            ));
        }
    }

    issues
}


#[cfg(test)]
mod tests {
    use super::fixtures::*;
    use super::*;

    #[test]
    fn well_formed_case_has_no_issues() {
        assert!(validate_case(&hypertension_case()).is_empty());
    }

    #[test]
    fn unsorted_vitals_flagged_once() {
        let mut case = hypertension_case();
        case.vitals[0].samples.swap(1, 2);
        let issues = validate_case(&case);
        assert_eq!(issues.len(), 1, "{issues:?}");
        assert_eq!(issues[0].path, "vitals[0].samples");
    }

    #[test]
    fn task_with_absent_condition_flagged() {
        let mut case = hypertension_case();
        case.monitoring_tasks[0].condition = ConditionRef::new("type2_diabetes");
        let issues = validate_case(&case);
        assert_eq!(issues.len(), 1);
        assert_eq!(issues[0].path, "monitoring_tasks[0].condition");
    }

    #[test]
    fn validation_is_pure() {
        let mut case = hypertension_case();
        case.reporting_period.start = date("2025-04-01");
        let before = case.clone();
        let a = validate_case(&case);
        let b = validate_case(&case);
        assert_eq!(a, b);
        assert_eq!(case, before);
        assert!(!a.is_empty());
    }

    #[test]
    fn other_invariants() {
        let mut case = hypertension_case();
        case.case_id = CaseId::new(" ");
        case.vitals[0].unit.clear();
        case.vitals[0].samples[0].value = f64::NAN;
        case.medications[0].recorded_doses = 6;
        case.dialogue[0].text = "  ".into();
        case.monitoring_tasks[0].required_frequency = Frequency::new(0, 1);
        let paths: Vec<String> = validate_case(&case).into_iter().map(|i| i.path).collect();
        assert_eq!(
            paths,
            vec![
                "case_id",
                "medications[0].dose_log",
                "vitals[0].unit",
                "vitals[0].samples[0].value",
                "monitoring_tasks[0].required_frequency",
                "dialogue[0].text",
            ]
        );
    }

    #[test]
    fn samples_before_period_start_are_allowed_after_end_are_not() {
        let mut case = hypertension_case();
        case.vitals[0].samples.insert(
            0,
            VitalSample {
                timestamp: ts("2025-02-20T07:00:00Z"),
                value: 130.0,
            },
        );
        assert!(validate_case(&case).is_empty());
        case.vitals[0].samples.push(VitalSample {
            timestamp: ts("2025-03-10T07:00:00Z"),
            value: 130.0,
        });
        assert_eq!(validate_case(&case).len(), 1);
    }

    #[test]
    fn severity_max_examples() {
        use UrgencyLabel::*;
        assert_eq!(severity_max(Stable, Stable), Stable);
        assert_eq!(severity_max(Attention, Urgent), Urgent);
        assert_eq!(severity_max(Urgent, Stable), Urgent);
    }

    #[test]
    fn severity_max_lattice_laws_exhaustive() {
        for a in UrgencyLabel::ALL {
            assert_eq!(severity_max(a, a), a);
            assert_eq!(severity_max(a, UrgencyLabel::Stable), a);
            assert_eq!(severity_max(a, UrgencyLabel::Urgent), UrgencyLabel::Urgent);
            for b in UrgencyLabel::ALL {
                assert_eq!(severity_max(a, b), severity_max(b, a));
                for c in UrgencyLabel::ALL {
                    assert_eq!(
                        severity_max(severity_max(a, b), c),
                        severity_max(a, severity_max(b, c))
                    );
                }
            }
        }
    }

    #[test]
    fn frequency_required_counts() {
        assert_eq!(Frequency::per_day(1).required_over(7), 7);
        assert_eq!(Frequency::new(1, 7).required_over(7), 1);
        assert_eq!(Frequency::new(1, 2).required_over(7), 4);
        assert_eq!(Frequency::new(1, 30).required_over(7), 1);
        assert_eq!("3/2".parse::<Frequency>().unwrap(), Frequency::new(3, 2));
        assert!("x".parse::<Frequency>().is_err());
    }

    #[test]
    fn timestamp_parsing() {
        let t = ts("2025-03-03T07:30:00Z");
        assert_eq!(t.to_string(), "2025-03-03T07:30:00Z");
        let offset: Timestamp = "2025-03-03T07:30:00+02:00".parse().unwrap();
        assert_eq!(offset, t);
        let frac: Timestamp = "2025-03-03T07:30:00.750Z".parse().unwrap();
        assert_eq!(frac, t);
    }

    #[test]
    fn period_geometry() {
        let p = ReportingPeriod::new(date("2025-03-03"), date("2025-03-09"));
        assert_eq!(p.days(), 7);
        assert_eq!(p.day_offset(ts("2025-03-04T12:00:00Z")), 1.5);
        assert_eq!(p.day_index(ts("2025-03-09T23:59:59Z")), 6);
        assert_eq!(p.dates().count(), 7);
    }
}
