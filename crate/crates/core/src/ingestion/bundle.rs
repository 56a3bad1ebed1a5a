use serde_json::Value;

use crate::domain::{validate_case, PatientCase};
use crate::error::BundleError;

use super::signals::annotate_dialogue;

/// Parse one case-bundle file.
///
/// Syntax errors, schema errors (missing or ill-typed fields) and invariant
/// failures are reported separately. Patient dialogue turns without an
/// explicit signal are annotated by the keyword rules.
pub fn parse_case_bundle(raw: &[u8]) -> Result<PatientCase, BundleError> {
    let value: Value =
        serde_json::from_slice(raw).map_err(|e| BundleError::Malformed(e.to_string()))?;
    if !value.is_object() {
        return Err(BundleError::Malformed(
            "top level must be an object".to_string(),
        ));
    }

    let mut case: PatientCase = serde_path_to_error::deserialize(value).map_err(|err| {
        let parent = err.path().to_string();
        let inner = err.into_inner().to_string();
        schema_error(&parent, &inner)
    })?;

    annotate_dialogue(&mut case);

    let issues = validate_case(&case);
    if issues.is_empty() {
        Ok(case)
    } else {
        Err(BundleError::Invariant(issues))
    }
}

/// Render a case in the bundle format. Output ends with a newline.
pub fn serialize_case(case: &PatientCase) -> String {
    let mut out = serde_json::to_string_pretty(case).expect("case serializes");
    out.push('\n');
    out
}

/// serde reports a missing field at the containing struct; append the field
/// name so the path names the missing key itself.
fn schema_error(parent: &str, message: &str) -> BundleError {
    let parent = if parent == "." { "" } else { parent };
    let missing = message
        .strip_prefix("missing field `")
        .and_then(|rest| rest.split('`').next());
    let path = match (missing, parent.is_empty()) {
        (Some(field), true) => field.to_string(),
        (Some(field), false) => format!("{parent}.{field}"),
        (None, true) => "<root>".to_string(),
        (None, false) => parent.to_string(),
    };
    let message = match message.find(" at line ") {
        Some(i) => message[..i].to_string(),
        None => message.to_string(),
    };
    BundleError::Schema { path, message }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::fixtures::hypertension_case;
    use crate::domain::AdherenceSignal;

    const MINIMAL: &str = r#"{
        "case_id": "min-1",
        "patient": {"age": 58, "sex": "male"},
        "conditions": ["hypertension"],
        "medications": [
            {"name": "Amlodipine", "dose": "5 mg", "schedule": 1, "recorded_doses": 0}
        ],
        "vitals": [],
        "dialogue": [
            {"speaker": "patient", "timestamp": "2025-01-08T09:00:00Z",
             "text": "I skipped my pills twice this week"}
        ],
        "monitoring_tasks": [],
        "reporting_period": {"start": "2025-01-06", "end": "2025-01-12"}
    }"#;

    #[test]
    fn minimal_bundle_parses() {
        let case = parse_case_bundle(MINIMAL.as_bytes()).unwrap();
        assert!(case.vitals.is_empty());
        assert_eq!(case.medications.len(), 1);
        assert_eq!(case.reporting_period.days(), 7);
    }

    #[test]
    fn missed_dose_phrase_is_annotated() {
        let case = parse_case_bundle(MINIMAL.as_bytes()).unwrap();
        assert_eq!(
            case.dialogue[0].adherence_signal,
            AdherenceSignal::ReportedMissedDose
        );
    }

    #[test]
    fn missing_period_end_names_field() {
        let raw = MINIMAL.replace(r#", "end": "2025-01-12""#, "");
        match parse_case_bundle(raw.as_bytes()) {
            Err(BundleError::Schema { path, .. }) => assert_eq!(path, "reporting_period.end"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn missing_top_level_key() {
        let raw = MINIMAL.replace(r#""monitoring_tasks": [],"#, "");
        match parse_case_bundle(raw.as_bytes()) {
            Err(BundleError::Schema { path, .. }) => assert_eq!(path, "monitoring_tasks"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn ill_typed_nested_field_carries_path() {
        let raw = MINIMAL.replace(r#""schedule": 1"#, r#""schedule": "daily""#);
        match parse_case_bundle(raw.as_bytes()) {
            Err(BundleError::Schema { path, .. }) => {
                assert_eq!(path, "medications[0].schedule")
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn syntax_error_is_malformed() {
        assert!(matches!(
            parse_case_bundle(b"{\"case_id\": "),
            Err(BundleError::Malformed(_))
        ));
        assert!(matches!(
            parse_case_bundle(b"[1, 2]"),
            Err(BundleError::Malformed(_))
        ));
    }

    #[test]
    fn invariant_violation_reported() {
        let raw = MINIMAL.replace(r#""start": "2025-01-06""#, r#""start": "2025-02-06""#);
        match parse_case_bundle(raw.as_bytes()) {
            Err(BundleError::Invariant(issues)) => {
                assert_eq!(issues[0].path, "reporting_period")
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn fixture_round_trips() {
        let case = hypertension_case();
        let text = serialize_case(&case);
        assert_eq!(parse_case_bundle(text.as_bytes()).unwrap(), case);
    }
}
