//! Keyword rules that turn patient dialogue into adherence signals.
//!
//! Rules are checked in table order and the first match wins. Negated misses
//! ("never missed") sit above the plain missed-dose rule so they are not read
//! as non-adherence; explicit adherence claims sit last so any admitted miss
//! in the same turn takes precedence.

use std::sync::LazyLock;

use regex::Regex;

use crate::domain::{AdherenceSignal, PatientCase, Speaker};

struct Rule {
    signal: AdherenceSignal,
    pattern: Regex,
}

static RULES: LazyLock<Vec<Rule>> = LazyLock::new(|| {
    let table: &[(AdherenceSignal, &str)] = &[
        (
            AdherenceSignal::ReportedAdherent,
            r"\b(never|haven't|have not|didn't|did not|not) (missed|miss|skipped|skip|forgotten|forgot)\b",
        ),
        (
            AdherenceSignal::ReportedMissedDose,
            r"\b(missed|missing|skipped|skip|skipping|forgot|forget|forgotten|ran out|run out|didn't take|did not take|haven't taken|have not taken|stopped taking)\b",
        ),
        (
            AdherenceSignal::ReportedSideEffect,
            r"\b(side effects?|dizzy|dizziness|nausea|nauseous|rash|headaches?|cough|swelling|tired all the time)\b",
        ),
        (
            AdherenceSignal::ReportedAdherent,
            r"\b(took (all|every|them all)|every dose|every day|as prescribed|on schedule|each morning|each evening)\b",
        ),
    ];
    table
        .iter()
        .map(|(signal, pattern)| Rule {
            signal: *signal,
            pattern: Regex::new(&format!("(?i){pattern}")).expect("rule pattern compiles"),
        })
        .collect()
});

/// Signal for one utterance, or `None` when no rule matches.
pub fn classify_turn_text(text: &str) -> AdherenceSignal {
    let normalized = text.replace('\u{2019}', "'");
    RULES
        .iter()
        .find(|rule| rule.pattern.is_match(&normalized))
        .map(|rule| rule.signal)
        .unwrap_or(AdherenceSignal::None)
}

/// Fill in signals for patient turns that carry none. Idempotent.
pub fn annotate_dialogue(case: &mut PatientCase) {
    for turn in &mut case.dialogue {
        if turn.speaker == Speaker::Patient && turn.adherence_signal == AdherenceSignal::None {
            turn.adherence_signal = classify_turn_text(&turn.text);
        }
    }
}
