//! Seeded synthetic cases built to land on a chosen urgency label under the
//! shipped triage configuration (rule-only mode).

use std::collections::BTreeMap;

use chrono::{Days, NaiveDate};
use rand::seq::{index, IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::domain::{
    CaseId, ConditionRef, DialogueTurn, Frequency, MedicationRecord, MonitoringTask, Patient,
    PatientCase, ReportingPeriod, Sex, Speaker, Timestamp, UrgencyLabel, VitalSample, VitalSeries,
    VitalType,
};
use crate::ingestion::annotate_dialogue;
use crate::triage::TriageConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AttentionRoute {
    Deviation,
    Adherence,
    Dialogue,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UrgentRoute {
    /// Clean data except a missed critical monitoring task.
    FailSafe,
    Deviations,
    Adherence,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "label", content = "route", rename_all = "snake_case")]
pub enum CaseTarget {
    Stable,
    Attention(AttentionRoute),
    Urgent(UrgentRoute),
}

impl CaseTarget {
    /// Route chosen from the seed: even seeds take the fail-safe route for
    /// urgent targets.
    pub fn from_seed(seed: u64, label: UrgencyLabel) -> Self {
        match label {
            UrgencyLabel::Stable => CaseTarget::Stable,
            UrgencyLabel::Attention => CaseTarget::Attention(match seed % 3 {
                0 => AttentionRoute::Deviation,
                1 => AttentionRoute::Adherence,
                _ => AttentionRoute::Dialogue,
            }),
            UrgencyLabel::Urgent if seed.is_multiple_of(2) => CaseTarget::Urgent(UrgentRoute::FailSafe),
            UrgencyLabel::Urgent if (seed / 2) % 2 == 0 => CaseTarget::Urgent(UrgentRoute::Deviations),
            UrgencyLabel::Urgent => CaseTarget::Urgent(UrgentRoute::Adherence),
        }
    }

    pub fn label(self) -> UrgencyLabel {
        match self {
            CaseTarget::Stable => UrgencyLabel::Stable,
            CaseTarget::Attention(_) => UrgencyLabel::Attention,
            CaseTarget::Urgent(_) => UrgencyLabel::Urgent,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Mix {
    pub urgent: u32,
    pub attention: u32,
    pub stable: u32,
}

impl Mix {
    pub fn total(&self) -> u32 {
        self.urgent + self.attention + self.stable
    }
}

impl std::str::FromStr for Mix {
    type Err = String;

    /// `urgent,attention,stable`, e.g. `14,8,2`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parts: Vec<&str> = s.split(',').map(str::trim).collect();
        let [u, a, st] = parts.as_slice() else {
            return Err(format!("mix `{s}` must be three counts: urgent,attention,stable"));
        };
        let n = |p: &str| p.parse::<u32>().map_err(|_| format!("invalid count `{p}` in mix"));
        Ok(Mix {
            urgent: n(u)?,
            attention: n(a)?,
            stable: n(st)?,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CohortSpec {
    pub seed: u64,
    pub mix: Mix,
    pub period_days: u32,
    pub conditions: Vec<ConditionRef>,
}

impl CohortSpec {
    pub fn new(seed: u64, mix: Mix) -> Self {
        Self {
            seed,
            mix,
            period_days: 7,
            conditions: default_conditions(),
        }
    }
}

pub fn default_conditions() -> Vec<ConditionRef> {
    ["hypertension", "type2_diabetes", "heart_failure"]
        .into_iter()
        .map(ConditionRef::new)
        .collect()
}

const ADHERENT: &[&str] = &[
    "I took every dose this week.",
    "I have been taking my tablets as prescribed.",
    "Never missed a dose, I keep them by the kettle.",
    "I take them each morning with breakfast.",
];
const NEUTRAL: &[&str] = &[
    "Work has been busy but I feel fine.",
    "The weather kept me indoors most days.",
    "I would like to talk about my diet next time.",
];
const SIDE_EFFECT: &[&str] = &[
    "I felt a bit dizzy after standing up.",
    "I have had a dry cough at night.",
];
const MISSED: &[&str] = &[
    "I forgot my tablets on the weekend.",
    "I ran out of pills for a couple of days.",
    "I skipped the evening dose when I was travelling.",
];
const CLINICIAN: &[&str] = &[
    "How have you been getting on with your medication?",
    "Any problems with the readings this week?",
    "Thanks, we will go over this at your next appointment.",
];

struct MedTemplate {
    name: &'static str,
    dose: &'static str,
    schedule: u32,
}

fn med_pool(condition: &str) -> &'static [MedTemplate] {
    match condition {
        "type2_diabetes" => &[
            MedTemplate { name: "Metformin", dose: "500 mg", schedule: 2 },
            MedTemplate { name: "Glipizide", dose: "5 mg", schedule: 1 },
        ],
        "heart_failure" => &[
            MedTemplate { name: "Furosemide", dose: "40 mg", schedule: 1 },
            MedTemplate { name: "Carvedilol", dose: "6.25 mg", schedule: 2 },
        ],
        _ => &[
            MedTemplate { name: "Lisinopril", dose: "10 mg", schedule: 1 },
            MedTemplate { name: "Amlodipine", dose: "5 mg", schedule: 1 },
        ],
    }
}

fn vitals_for(condition: &str) -> &'static [VitalType] {
    match condition {
        "type2_diabetes" => &[VitalType::Glucose],
        "heart_failure" => &[VitalType::Weight, VitalType::HeartRate],
        _ => &[VitalType::SystolicBp, VitalType::DiastolicBp],
    }
}

fn critical_task(condition: &str) -> (&'static str, &'static str) {
    match condition {
        "type2_diabetes" => ("glucose-daily", "daily glucose check"),
        "heart_failure" => ("weight-daily", "daily weight check"),
        _ => ("bp-daily", "daily blood pressure check"),
    }
}

struct VitalProfile {
    unit: &'static str,
    base: (f64, f64),
    noise_cap: f64,
    spike: (f64, f64),
    /// Rounding step of recorded values.
    resolution: f64,
}

fn profile(vital: VitalType) -> VitalProfile {
    match vital {
        VitalType::SystolicBp => VitalProfile { unit: "mmHg", base: (112.0, 130.0), noise_cap: 4.0, spike: (8.0, 20.0), resolution: 1.0 },
        VitalType::DiastolicBp => VitalProfile { unit: "mmHg", base: (68.0, 82.0), noise_cap: 3.0, spike: (5.0, 12.0), resolution: 1.0 },
        VitalType::HeartRate => VitalProfile { unit: "bpm", base: (62.0, 82.0), noise_cap: 4.0, spike: (10.0, 25.0), resolution: 1.0 },
        VitalType::Glucose => VitalProfile { unit: "mg/dL", base: (100.0, 150.0), noise_cap: 10.0, spike: (30.0, 80.0), resolution: 1.0 },
        VitalType::Weight => VitalProfile { unit: "kg", base: (60.0, 95.0), noise_cap: 0.4, spike: (3.0, 8.0), resolution: 0.1 },
    }
}

fn round_to(v: f64, resolution: f64) -> f64 {
    if resolution >= 1.0 {
        v.round()
    } else {
        let k = (1.0 / resolution).round();
        (v * k).round() / k
    }
}

fn start_date(rng: &mut ChaCha8Rng) -> NaiveDate {
    let base = NaiveDate::from_ymd_opt(2025, 1, 6).expect("valid date");
    base + Days::new(rng.random_range(0..300))
}

/// Reading times: one per day, or several per day on periods shorter than
/// three days so that every series has at least three readings. The pattern
/// is symmetric about the middle of the period.
fn reading_times(period: &ReportingPeriod, minute: u32) -> Vec<Timestamp> {
    let days = period.days();
    let hours: &[u32] = match days {
        1 => &[8, 14, 20],
        2 => &[8, 20],
        _ => &[8],
    };
    period
        .dates()
        .flat_map(|d| hours.iter().map(move |h| Timestamp::at(d, *h, minute, 0)))
        .collect()
}

fn dose_slots(schedule: u32) -> &'static [u32] {
    match schedule {
        1 => &[8],
        2 => &[8, 20],
        _ => &[8, 14, 20],
    }
}

fn generate_series(
    rng: &mut ChaCha8Rng,
    vital: VitalType,
    times: &[Timestamp],
    period: &ReportingPeriod,
    config: &TriageConfig,
    spikes: &[usize],
) -> VitalSeries {
    let p = profile(vital);
    let xs: Vec<f64> = times.iter().map(|t| period.day_offset(*t)).collect();
    let mean_x = xs.iter().sum::<f64>() / xs.len() as f64;
    let sxx: f64 = xs.iter().map(|x| (x - mean_x).powi(2)).sum();
    let sum_abs: f64 = xs.iter().map(|x| (x - mean_x).abs()).sum();
    let slope_limit = config.slope_threshold(vital).unwrap_or(f64::INFINITY);
    // Keep the worst-case slope of noise plus rounding under 40% of the alert.
    let amplitude = if sum_abs > 0.0 {
        (0.4 * slope_limit * sxx / sum_abs - p.resolution / 2.0).clamp(0.0, p.noise_cap)
    } else {
        p.noise_cap
    };
    let base = round_to(rng.random_range(p.base.0..p.base.1), p.resolution);
    let high = (p.base.1 + p.noise_cap + p.resolution).max(base);
    let spike = round_to(high_limit(vital, config).unwrap_or(high) + rng.random_range(p.spike.0..p.spike.1), p.resolution);

    let samples = times
        .iter()
        .enumerate()
        .map(|(i, t)| {
            let value = if spikes.contains(&i) {
                spike
            } else {
                let noise = if amplitude > 0.0 { rng.random_range(-amplitude..=amplitude) } else { 0.0 };
                round_to(base + noise, p.resolution)
            };
            VitalSample { timestamp: *t, value }
        })
        .collect();
    VitalSeries {
        vital_type: vital,
        unit: p.unit.to_string(),
        samples,
    }
}

fn high_limit(vital: VitalType, config: &TriageConfig) -> Option<f64> {
    config
        .thresholds
        .values()
        .filter_map(|m| m.get(&vital))
        .map(|r| r.high)
        .reduce(f64::max)
}

/// Indices whose slope contributions cancel: the middle reading of an
/// odd-length series or a mirrored pair of an even-length one.
fn balanced_spikes(n: usize) -> Vec<usize> {
    if n % 2 == 1 {
        vec![n / 2]
    } else {
        vec![0, n - 1]
    }
}

/// Recorded dose count per medication for a target of `total` overall.
fn split_doses(expected: &[u32], total: u32) -> Vec<u32> {
    let sum: u32 = expected.iter().sum();
    let mut out: Vec<u32> = expected
        .iter()
        .map(|e| if sum == 0 { 0 } else { (u64::from(total) * u64::from(*e) / u64::from(sum)) as u32 })
        .collect();
    let mut left = total - out.iter().sum::<u32>();
    for (o, e) in out.iter_mut().zip(expected) {
        let add = left.min(e - *o);
        *o += add;
        left -= add;
    }
    out
}

fn build_medication(
    rng: &mut ChaCha8Rng,
    template: &MedTemplate,
    schedule: u32,
    period: &ReportingPeriod,
    recorded: u32,
) -> MedicationRecord {
    let slots: Vec<Timestamp> = period
        .dates()
        .flat_map(|d| dose_slots(schedule).iter().map(move |h| Timestamp::at(d, *h, 0, 0)))
        .collect();
    let mut chosen = index::sample(rng, slots.len(), recorded as usize).into_vec();
    chosen.sort_unstable();
    let refill_dates = if rng.random_bool(0.6) {
        let offset = rng.random_range(0..period.days());
        vec![period.start + Days::new(u64::from(offset))]
    } else {
        Vec::new()
    };
    MedicationRecord {
        name: template.name.to_string(),
        dose: template.dose.to_string(),
        schedule,
        refill_dates,
        recorded_doses: recorded,
        dose_log: chosen.into_iter().map(|i| slots[i]).collect(),
    }
}

/// One case for `condition` whose rule-only triage lands on `target`.
pub fn generate_case_with(seed: u64, target: CaseTarget, condition: &ConditionRef, period_days: u32) -> PatientCase {
    let config = TriageConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let period_days = period_days.max(1);
    let start = start_date(&mut rng);
    let period = ReportingPeriod::new(start, start + Days::new(u64::from(period_days - 1)));
    let slug = condition.as_str();

    // Vitals.
    let minute = rng.random_range(0..60);
    let times = reading_times(&period, minute);
    let n = times.len();
    let vitals: Vec<VitalSeries> = vitals_for(slug)
        .iter()
        .enumerate()
        .map(|(i, vital)| {
            let spikes: Vec<usize> = match (i, target) {
                (0, CaseTarget::Attention(AttentionRoute::Deviation)) => balanced_spikes(n),
                (0, CaseTarget::Urgent(UrgentRoute::Deviations)) => {
                    let k = rng.random_range(3..=n.max(3));
                    let mut idx = index::sample(&mut rng, n, k.min(n)).into_vec();
                    idx.sort_unstable();
                    idx
                }
                _ => Vec::new(),
            };
            generate_series(&mut rng, *vital, &times, &period, &config, &spikes)
        })
        .collect();

    // Medications and doses.
    let pool = med_pool(slug);
    let med_count = rng.random_range(1..=pool.len());
    let mut templates: Vec<&MedTemplate> = pool.iter().collect();
    templates.shuffle(&mut rng);
    templates.truncate(med_count);
    // A single once-daily dose on a one-day period cannot express a rate
    // between the two adherence cutoffs.
    let total_schedule: u32 = templates.iter().map(|t| t.schedule).sum();
    let bump = matches!(target, CaseTarget::Attention(AttentionRoute::Adherence)) && total_schedule * period.days() < 2;
    let schedules: Vec<u32> = templates
        .iter()
        .enumerate()
        .map(|(i, t)| if bump && i == 0 { t.schedule + 1 } else { t.schedule })
        .collect();
    let expected: Vec<u32> = schedules.iter().map(|s| s * period.days()).collect();
    let e: u32 = expected.iter().sum();
    let total = match target {
        CaseTarget::Attention(AttentionRoute::Adherence) => {
            let lo = e.div_ceil(2);
            let hi = (e * 4).div_ceil(5) - 1;
            rng.random_range(lo..=hi.max(lo))
        }
        CaseTarget::Urgent(UrgentRoute::Adherence) => rng.random_range(0..=(e - 1) / 2),
        _ => e - rng.random_range(0..=e / 10),
    };
    let recorded = split_doses(&expected, total);
    let medications: Vec<MedicationRecord> = templates
        .iter()
        .zip(schedules.iter().zip(recorded))
        .map(|(t, (s, r))| build_medication(&mut rng, t, *s, &period, r))
        .collect();

    // Monitoring tasks.
    let (task_id, description) = critical_task(slug);
    let first_per_day: Vec<Timestamp> = period.dates().map(|d| Timestamp::at(d, 8, minute, 0)).collect();
    let completions = if target == CaseTarget::Urgent(UrgentRoute::FailSafe) {
        let required = first_per_day.len();
        let k = rng.random_range(0..required);
        let mut idx = index::sample(&mut rng, required, k).into_vec();
        idx.sort_unstable();
        idx.into_iter().map(|i| first_per_day[i]).collect()
    } else {
        first_per_day.clone()
    };
    let mut monitoring_tasks = vec![MonitoringTask {
        task_id: task_id.to_string(),
        condition: condition.clone(),
        description: description.to_string(),
        required_frequency: Frequency::per_day(1),
        critical: true,
        completion_timestamps: completions,
    }];
    if rng.random_bool(0.5) {
        let walks: Vec<Timestamp> = period
            .dates()
            .filter(|_| rng.random_bool(0.5))
            .map(|d| Timestamp::at(d, 17, 0, 0))
            .collect();
        monitoring_tasks.push(MonitoringTask {
            task_id: "walk".to_string(),
            condition: condition.clone(),
            description: "30-minute walk".to_string(),
            required_frequency: Frequency::new(3, 7),
            critical: false,
            completion_timestamps: walks,
        });
    }

    // Dialogue.
    let mut patient_lines: Vec<&str> = Vec::new();
    match target {
        CaseTarget::Attention(AttentionRoute::Dialogue) | CaseTarget::Urgent(UrgentRoute::Adherence) => {
            patient_lines.push(MISSED.choose(&mut rng).copied().unwrap_or(MISSED[0]));
        }
        _ => {}
    }
    let extra = rng.random_range(1..=2);
    for _ in 0..extra {
        let bank = match rng.random_range(0..3) {
            0 => ADHERENT,
            1 => NEUTRAL,
            _ => SIDE_EFFECT,
        };
        patient_lines.push(bank.choose(&mut rng).copied().unwrap_or(NEUTRAL[0]));
    }
    let mut dialogue = Vec::new();
    for (i, line) in patient_lines.into_iter().enumerate() {
        let day = rng.random_range(0..period.days());
        let date = period.start + Days::new(u64::from(day));
        dialogue.push(DialogueTurn {
            speaker: Speaker::Clinician,
            timestamp: Timestamp::at(date, 18, (2 * i) as u32, 0),
            text: CLINICIAN[i % CLINICIAN.len()].to_string(),
            adherence_signal: Default::default(),
        });
        dialogue.push(DialogueTurn {
            speaker: Speaker::Patient,
            timestamp: Timestamp::at(date, 18, (2 * i + 1) as u32, 0),
            text: line.to_string(),
            adherence_signal: Default::default(),
        });
    }
    dialogue.sort_by_key(|t| t.timestamp);

    let sexes = [Sex::Female, Sex::Male];
    let mut case = PatientCase {
        case_id: CaseId::new(format!("sim-{seed}")),
        patient: Patient {
            age: rng.random_range(45..=85),
            sex: *sexes.choose(&mut rng).unwrap_or(&Sex::Unknown),
        },
        conditions: vec![condition.clone()],
        medications,
        vitals,
        dialogue,
        monitoring_tasks,
        reporting_period: period,
    };
    annotate_dialogue(&mut case);
    case
}

/// Route chosen from the seed; see [`CaseTarget::from_seed`].
pub fn generate_case(seed: u64, target: UrgencyLabel, condition: &ConditionRef, period_days: u32) -> PatientCase {
    generate_case_with(seed, CaseTarget::from_seed(seed, target), condition, period_days)
}

/// Exactly the requested label counts, in shuffled order, with ids
/// `case-001`, `case-002`, ... Urgent cases alternate between the fail-safe
/// route and the deviation/adherence routes.
pub fn generate_cohort(spec: &CohortSpec) -> Vec<PatientCase> {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut targets: Vec<CaseTarget> = Vec::new();
    let urgent_routes = [UrgentRoute::FailSafe, UrgentRoute::Deviations, UrgentRoute::FailSafe, UrgentRoute::Adherence];
    let attention_routes = [AttentionRoute::Deviation, AttentionRoute::Adherence, AttentionRoute::Dialogue];
    for i in 0..spec.mix.urgent as usize {
        targets.push(CaseTarget::Urgent(urgent_routes[i % urgent_routes.len()]));
    }
    for i in 0..spec.mix.attention as usize {
        targets.push(CaseTarget::Attention(attention_routes[i % attention_routes.len()]));
    }
    targets.extend((0..spec.mix.stable).map(|_| CaseTarget::Stable));
    targets.shuffle(&mut rng);

    let conditions = if spec.conditions.is_empty() { default_conditions() } else { spec.conditions.clone() };
    let width = targets.len().to_string().len().max(3);
    targets
        .into_iter()
        .enumerate()
        .map(|(i, target)| {
            let condition = conditions.choose(&mut rng).cloned().unwrap_or_else(|| conditions[0].clone());
            let mut case = generate_case_with(rng.random(), target, &condition, spec.period_days);
            case.case_id = CaseId::new(format!("case-{:0width$}", i + 1));
            case
        })
        .collect()
}

/// Label histogram of a list of labels, with zero counts for absent labels.
pub fn label_histogram(labels: impl IntoIterator<Item = UrgencyLabel>) -> BTreeMap<UrgencyLabel, u32> {
    let mut h: BTreeMap<UrgencyLabel, u32> = UrgencyLabel::ALL.into_iter().map(|l| (l, 0)).collect();
    for l in labels {
        *h.entry(l).or_default() += 1;
    }
    h
}

fn random_times(rng: &mut ChaCha8Rng, period: &ReportingPeriod, n: usize) -> Vec<Timestamp> {
    let span = i64::from(period.days()) * 86_400;
    let start = Timestamp::at(period.start, 0, 0, 0).naive();
    let mut secs: Vec<i64> = (0..n).map(|_| rng.random_range(0..span)).collect();
    secs.sort_unstable();
    secs.into_iter()
        .map(|s| Timestamp::new(start + chrono::Duration::seconds(s)))
        .collect()
}

/// Unconstrained random case: any mix of conditions, tasks, coverage, vitals
/// and doses. Always satisfies the bundle invariants.
pub fn random_case(seed: u64) -> PatientCase {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let start = start_date(&mut rng);
    let days = rng.random_range(1..=14u32);
    let period = ReportingPeriod::new(start, start + Days::new(u64::from(days - 1)));

    let mut conditions = default_conditions();
    conditions.shuffle(&mut rng);
    conditions.truncate(rng.random_range(1..=3));

    let mut vital_types: Vec<VitalType> = VitalType::ALL.to_vec();
    vital_types.shuffle(&mut rng);
    vital_types.truncate(rng.random_range(0..=VitalType::ALL.len()));
    let vitals = vital_types
        .into_iter()
        .map(|vital| {
            let (lo, hi) = vital.plausible_bounds();
            let n = rng.random_range(0..=2 * days as usize);
            let mut times = random_times(&mut rng, &period, n);
            times.dedup();
            VitalSeries {
                vital_type: vital,
                unit: profile(vital).unit.to_string(),
                samples: times
                    .into_iter()
                    .map(|t| VitalSample {
                        timestamp: t,
                        value: round_to(rng.random_range(lo..hi), 1.0),
                    })
                    .collect(),
            }
        })
        .collect();

    let med_count = rng.random_range(0..=3);
    let medications = (0..med_count)
        .map(|i| {
            let schedule = rng.random_range(1..=3);
            let expected = schedule * days;
            let recorded = rng.random_range(0..=expected + 1);
            let pool = med_pool(conditions[0].as_str());
            let t = &pool[i % pool.len()];
            MedicationRecord {
                name: format!("{} {}", t.name, i + 1),
                dose: t.dose.to_string(),
                schedule,
                refill_dates: Vec::new(),
                recorded_doses: recorded,
                dose_log: random_times(&mut rng, &period, recorded as usize),
            }
        })
        .collect();

    let task_count = rng.random_range(0..=4);
    let monitoring_tasks = (0..task_count)
        .map(|i| {
            let condition = conditions.choose(&mut rng).cloned().unwrap_or_else(|| conditions[0].clone());
            let frequency = Frequency::new(rng.random_range(1..=3), rng.random_range(1..=7));
            let required = frequency.required_over(days) as usize;
            let completed = rng.random_range(0..=required + 1);
            MonitoringTask {
                task_id: format!("task-{i}"),
                condition,
                description: format!("monitoring task {i}"),
                required_frequency: frequency,
                critical: rng.random_bool(0.6),
                completion_timestamps: random_times(&mut rng, &period, completed),
            }
        })
        .collect();

    let turns = rng.random_range(0..=4);
    let banks = [ADHERENT, NEUTRAL, SIDE_EFFECT, MISSED];
    let dialogue = random_times(&mut rng, &period, turns)
        .into_iter()
        .map(|t| DialogueTurn {
            speaker: if rng.random_bool(0.7) { Speaker::Patient } else { Speaker::Clinician },
            timestamp: t,
            text: banks
                .choose(&mut rng)
                .and_then(|b| b.choose(&mut rng))
                .copied()
                .unwrap_or(NEUTRAL[0])
                .to_string(),
            adherence_signal: Default::default(),
        })
        .collect();

    let mut case = PatientCase {
        case_id: CaseId::new(format!("rand-{seed}")),
        patient: Patient {
            age: rng.random_range(18..=95),
            sex: Sex::Unknown,
        },
        conditions,
        medications,
        vitals,
        dialogue,
        monitoring_tasks,
        reporting_period: period,
    };
    annotate_dialogue(&mut case);
    case
}
