//! Section drafting through the external chat backend.

use std::collections::HashSet;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{LazyLock, Mutex};

use regex::Regex;
use serde_json::{json, Value};

use crate::charts::ChartSpec;
use crate::domain::{PatientCase, Timestamp};
use crate::error::{Error, Result};
use crate::generation::{ChatBackend, ChatMessage, ChatRequest, GenerationError};
use crate::triage::TriageResult;

use super::template::{generate_template_draft, template_moves};
use super::{DraftReport, GeneratorConfig, MoveTag, Moves, Origin, Topic};

const SYSTEM_PROMPT: &str = include_str!("../../prompts/system.txt");
const SECTION_PROMPT: &str = include_str!("../../prompts/section.txt");

static DATE: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"\b\d{4}-\d{2}-\d{2}\b").unwrap());
static NUMBER: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"\d+(?:\.\d+)?").unwrap());
static THINK: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"(?s)^\s*<think>.*?</think>").unwrap());

/// The data a section may draw on, as sent to the model.
fn section_data(case: &PatientCase, triage: &TriageResult, topic: Topic) -> Value {
    match topic {
        Topic::Medications => json!(case
            .medications
            .iter()
            .map(|m| json!({
                "name": m.name,
                "dose": m.dose,
                "doses_per_day": m.schedule,
                "refill_dates": m.refill_dates,
            }))
            .collect::<Vec<_>>()),
        Topic::Vitals => json!(triage.trends),
        Topic::Adherence => json!({
            "summary": triage.adherence,
            "tasks": case.monitoring_tasks.iter().map(|t| json!({
                "task_id": t.task_id,
                "description": t.description,
                "critical": t.critical,
            })).collect::<Vec<_>>(),
        }),
        Topic::DialogueHighlights => json!(case.dialogue),
        Topic::Plan => json!({
            "label": triage.label,
            "rule_floor": triage.rule_floor,
            "failsafe_triggered": triage.failsafe_triggered,
            "missed_critical_tasks": triage.missed_critical_tasks,
            "rules": triage.rationale.iter().map(|f| f.rule.describe()).collect::<Vec<_>>(),
        }),
    }
}

/// User message for one section.
pub fn render_section_prompt(
    case: &PatientCase,
    triage: &TriageResult,
    topic: Topic,
    gaps: &[String],
) -> String {
    let gap_text = if gaps.is_empty() {
        "(none)".to_string()
    } else {
        gaps.iter().map(|g| format!("- {g}")).collect::<Vec<_>>().join("\n")
    };
    let data = serde_json::to_string_pretty(&section_data(case, triage, topic)).unwrap_or_default();
    SECTION_PROMPT
        .replace("{title}", topic.title())
        .replace("{start}", &case.reporting_period.start.to_string())
        .replace("{end}", &case.reporting_period.end.to_string())
        .replace("{label}", triage.label.as_str())
        .replace("{gaps}", &gap_text)
        .replace("{data}", &data)
}

/// Parse a response into the three moves.
///
/// Each heading must start its own line, appear exactly once and in order,
/// and have a non-empty body. Light markdown around a heading is tolerated;
/// any text before the first heading is not.
pub fn parse_three_moves(response: &str) -> std::result::Result<Moves, String> {
    let response = THINK.replace(response, "");
    let mut found: Vec<(MoveTag, Vec<String>)> = Vec::new();
    for line in response.lines() {
        let bare = line.trim().trim_start_matches(['#', '*', ' ']);
        let lower = bare.to_ascii_lowercase();
        let heading = MoveTag::ORDER.into_iter().find_map(|tag| {
            let h = tag.heading().to_ascii_lowercase();
            let rest = lower.strip_prefix(&h)?;
            let rest = rest.trim_start_matches('*');
            rest.starts_with(':').then(|| {
                let offset = bare.len() - rest.len() + 1;
                (tag, bare[offset..].trim_start_matches('*').trim().to_string())
            })
        });
        match (heading, found.last_mut()) {
            (Some((tag, rest)), _) => found.push((tag, vec![rest])),
            (None, Some((_, body))) => body.push(line.trim().to_string()),
            (None, None) if line.trim().is_empty() => {}
            (None, None) => return Err("text before the first heading".to_string()),
        }
    }
    let tags: Vec<MoveTag> = found.iter().map(|(t, _)| *t).collect();
    if tags != MoveTag::ORDER {
        return Err(format!(
            "expected headings What happened / Why it matters / What to do in order, got {}",
            tags.iter().map(|t| t.heading()).collect::<Vec<_>>().join(" / ")
        ));
    }
    let mut texts = Vec::new();
    for (tag, body) in found {
        let text = body
            .iter()
            .map(|l| l.trim())
            .filter(|l| !l.is_empty())
            .collect::<Vec<_>>()
            .join(" ");
        if text.is_empty() {
            return Err(format!("empty `{}` part", tag.heading()));
        }
        texts.push(text);
    }
    let mut texts = texts.into_iter();
    Ok(Moves::new(
        texts.next().unwrap_or_default(),
        texts.next().unwrap_or_default(),
        texts.next().unwrap_or_default(),
    ))
}

/// Numbers in `text` that do not occur in `source`. Dates must occur
/// verbatim; other numbers may be `source` values shown to fewer decimals.
pub(crate) fn ungrounded_numbers(text: &str, source: &str) -> Vec<String> {
    let source_dates: HashSet<&str> = DATE.find_iter(source).map(|m| m.as_str()).collect();
    let source_tokens: HashSet<&str> = NUMBER.find_iter(source).map(|m| m.as_str()).collect();
    let source_values: Vec<f64> = source_tokens.iter().filter_map(|t| t.parse().ok()).collect();

    let mut bad: Vec<String> = DATE
        .find_iter(text)
        .map(|m| m.as_str())
        .filter(|d| !source_dates.contains(d))
        .map(str::to_string)
        .collect();
    let without_dates = DATE.replace_all(text, " ");
    for token in NUMBER.find_iter(&without_dates).map(|m| m.as_str()) {
        if source_tokens.contains(token) {
            continue;
        }
        let decimals = token.split_once('.').map_or(0, |(_, d)| d.len());
        let matched = source_values
            .iter()
            .any(|v| format!("{:.*}", decimals, v) == token);
        if !matched {
            bad.push(token.to_string());
        }
    }
    bad
}

fn request_section(
    case: &PatientCase,
    triage: &TriageResult,
    topic: Topic,
    gaps: &[String],
    config: &GeneratorConfig,
    backend: &dyn ChatBackend,
) -> Result<Moves> {
    let prompt = render_section_prompt(case, triage, topic, gaps);
    let request = ChatRequest::new(
        config,
        vec![ChatMessage::system(SYSTEM_PROMPT), ChatMessage::user(prompt.clone())],
    );
    let response = backend.complete(&request).map_err(|e| match e {
        GenerationError::BadResponse(m) => Error::GenerationFailed(m),
        other => Error::ServiceUnreachable(other.to_string()),
    })?;
    let mut moves = parse_three_moves(&response)
        .map_err(|e| Error::GenerationFailed(format!("{}: {e}", topic.section_id())))?;

    for gap in gaps {
        if !moves.what_happened.contains(gap.as_str()) {
            moves.what_happened.push(' ');
            moves.what_happened.push_str(gap);
        }
    }
    for (_, text) in moves.iter() {
        let bad = ungrounded_numbers(text, &prompt);
        if !bad.is_empty() {
            return Err(Error::GenerationFailed(format!(
                "{}: numbers not present in the data: {}",
                topic.section_id(),
                bad.join(", ")
            )));
        }
    }
    Ok(moves)
}

/// Draft every section through the backend, at most
/// `config.max_concurrency` requests at a time. A failed section falls back
/// to its template text when `config.fallback_to_template` is set.
pub fn generate_external_draft(
    case: &PatientCase,
    triage: &TriageResult,
    charts: &[ChartSpec],
    config: &GeneratorConfig,
    backend: &dyn ChatBackend,
    generated_at: Timestamp,
) -> Result<DraftReport> {
    let mut report = generate_template_draft(case, triage, charts, generated_at)?;
    let jobs: Vec<(Topic, Vec<String>)> = report
        .sections
        .iter()
        .map(|s| (s.topic, s.gap_statements.clone()))
        .collect();
    let results: Vec<Mutex<Option<Result<Moves>>>> = jobs.iter().map(|_| Mutex::new(None)).collect();
    let next = AtomicUsize::new(0);
    let workers = config.max_concurrency.clamp(1, jobs.len().max(1));

    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::SeqCst);
                let Some((topic, gaps)) = jobs.get(i) else {
                    break;
                };
                let r = request_section(case, triage, *topic, gaps, config, backend);
                *results[i].lock().unwrap_or_else(|p| p.into_inner()) = Some(r);
            });
        }
    });

    for (section, slot) in report.sections.iter_mut().zip(results) {
        let result = slot
            .into_inner()
            .unwrap_or_else(|p| p.into_inner())
            .unwrap_or_else(|| Err(Error::GenerationFailed("section was not attempted".into())));
        match result {
            Ok(moves) => {
                section.moves = moves;
                section.origin = Origin::ExternalModel;
            }
            Err(_) if config.fallback_to_template => {
                section.moves = template_moves(case, triage, section.topic, &section.gap_statements);
                section.origin = Origin::Template;
            }
            Err(e) => return Err(e),
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::charts::build_charts;
    use crate::domain::fixtures::{hypertension_case, ts};
    use crate::triage::{classify, detect_trends, summarize_adherence, TriageConfig};
    use std::sync::atomic::AtomicUsize;

    fn triaged(case: &PatientCase) -> TriageResult {
        let config = TriageConfig::default();
        classify(
            case,
            &summarize_adherence(case),
            &detect_trends(case, &config),
            &config,
            None,
        )
    }

    #[test]
    fn parses_well_formed_response() {
        let m = parse_three_moves(
            "What happened: Seven readings.\nMore detail.\n\nWhy it matters:\nControl is good.\n**What to do:** Continue.",
        )
        .unwrap();
        assert_eq!(m.what_happened, "Seven readings. More detail.");
        assert_eq!(m.why_it_matters, "Control is good.");
        assert_eq!(m.what_to_do, "Continue.");
        let m = parse_three_moves("<think>hmm</think>\n## What happened:\na\n## Why it matters:\nb\n## What to do:\nc").unwrap();
        assert_eq!(m, Moves::new("a", "b", "c"));
    }

    #[test]
    fn rejects_malformed_responses() {
        for bad in [
            "Sure! What happened: a\nWhy it matters: b\nWhat to do: c",
            "What happened: a\nWhat to do: c",
            "Why it matters: b\nWhat happened: a\nWhat to do: c",
            "What happened: a\nWhy it matters:\nWhat to do: c",
            "What happened: a\nWhy it matters: b\nWhat to do: c\nWhat to do: d",
            "",
        ] {
            assert!(parse_three_moves(bad).is_err(), "{bad:?}");
        }
    }

    #[test]
    fn grounding_check() {
        let source = r#"{"last_value": 152.0, "slope": 1.2345, "count": 7, "start": "2025-03-03"}"#;
        assert!(ungrounded_numbers("latest 152, slope 1.2, 7 readings since 2025-03-03", source).is_empty());
        assert_eq!(ungrounded_numbers("about 90% of doses", source), ["90"]);
        assert_eq!(ungrounded_numbers("on 2025-04-01", source), ["2025-04-01"]);
    }

    #[test]
    fn prompt_contains_data_and_gaps() {
        let mut case = hypertension_case();
        case.dialogue.clear();
        let t = triaged(&case);
        let gaps = vec!["No patient dialogue was recorded between 2025-03-03 and 2025-03-09.".to_string()];
        let p = render_section_prompt(&case, &t, Topic::DialogueHighlights, &gaps);
        assert!(p.contains("Section: Dialogue highlights"));
        assert!(p.contains(&gaps[0]));
        let p = render_section_prompt(&case, &t, Topic::Vitals, &[]);
        assert!(p.contains("\"sample_count\": 7"));
        assert!(p.contains("(none)"));
    }

    struct Scripted {
        reply: fn(&ChatRequest) -> Result<String, GenerationError>,
        in_flight: AtomicUsize,
        peak: AtomicUsize,
    }

    impl Scripted {
        fn new(reply: fn(&ChatRequest) -> Result<String, GenerationError>) -> Self {
            Self {
                reply,
                in_flight: AtomicUsize::new(0),
                peak: AtomicUsize::new(0),
            }
        }
    }

    impl ChatBackend for Scripted {
        fn complete(&self, request: &ChatRequest) -> Result<String, GenerationError> {
            let now = self.in_flight.fetch_add(1, Ordering::SeqCst) + 1;
            self.peak.fetch_max(now, Ordering::SeqCst);
            std::thread::sleep(std::time::Duration::from_millis(30));
            self.in_flight.fetch_sub(1, Ordering::SeqCst);
            (self.reply)(request)
        }
    }

    fn run(backend: &Scripted, config: &GeneratorConfig) -> Result<DraftReport> {
        let case = hypertension_case();
        let t = triaged(&case);
        let charts = build_charts(&case, &t);
        generate_external_draft(&case, &t, &charts, config, backend, ts("2025-03-10T09:00:00Z"))
    }

    #[test]
    fn external_sections_are_marked_and_bounded() {
        let backend = Scripted::new(|_| {
            Ok("What happened: Readings were reviewed.\nWhy it matters: Context.\nWhat to do: Continue.".into())
        });
        let config = GeneratorConfig {
            max_concurrency: 2,
            ..GeneratorConfig::external("http://unused")
        };
        let r = run(&backend, &config).unwrap();
        assert!(r.sections.iter().all(|s| s.origin == Origin::ExternalModel));
        assert!(backend.peak.load(Ordering::SeqCst) <= 2);
        assert_eq!(r.section("vitals").unwrap().chart_refs, ["vital-systolic_bp"]);
    }

    #[test]
    fn failures_fall_back_per_section() {
        let backend = Scripted::new(|req| {
            if req.messages[1].content.contains("Section: Vital signs") {
                Err(GenerationError::Timeout)
            } else if req.messages[1].content.contains("Section: Plan") {
                Ok("What happened: Adherence was 93% this week.\nWhy it matters: x.\nWhat to do: y.".into())
            } else {
                Ok("What happened: ok.\nWhy it matters: ok.\nWhat to do: ok.".into())
            }
        });
        let r = run(&backend, &GeneratorConfig::external("http://unused")).unwrap();
        let origin = |id: &str| r.section(id).unwrap().origin;
        assert_eq!(origin("vitals"), Origin::Template);
        assert_eq!(origin("plan"), Origin::Template);
        assert_eq!(origin("medications"), Origin::ExternalModel);

        let strict = GeneratorConfig {
            fallback_to_template: false,
            ..GeneratorConfig::external("http://unused")
        };
        assert!(matches!(run(&backend, &strict), Err(Error::ServiceUnreachable(_))));
    }

    #[test]
    fn missing_gap_statement_is_restored() {
        let mut case = hypertension_case();
        case.dialogue.clear();
        let t = triaged(&case);
        let backend = Scripted::new(|_| Ok("What happened: Nothing.\nWhy it matters: a.\nWhat to do: b.".into()));
        let r = generate_external_draft(
            &case,
            &t,
            &build_charts(&case, &t),
            &GeneratorConfig::external("http://unused"),
            &backend,
            ts("2025-03-10T09:00:00Z"),
        )
        .unwrap();
        let s = r.section("dialogue-highlights").unwrap();
        assert!(s.moves.what_happened.contains(&s.gap_statements[0]));
    }
}
