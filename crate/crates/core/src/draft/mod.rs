//! Bounded draft generation.
//!
//! A draft always has the same five sections, each with three moves (what
//! happened, why it matters, what to do). Drafts are inert data: nothing in
//! this module can open, edit or approve a review session.

mod external;
mod gaps;
mod template;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

pub use external::{generate_external_draft, parse_three_moves, render_section_prompt};
pub use gaps::detect_gaps;
pub use template::{fmt_number, generate_template_draft};

use crate::charts::{build_charts, ChartSpec};
use crate::digest::digest_json;
use crate::domain::{CaseId, Timestamp, UrgencyLabel};
use crate::error::{Error, Result};
use crate::generation::ChatBackend;
use crate::ingestion::CaseStore;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Topic {
    Medications,
    Vitals,
    Adherence,
    DialogueHighlights,
    Plan,
}

impl Topic {
    /// Fixed section order of every draft.
    pub const ORDER: [Topic; 5] = [
        Topic::Medications,
        Topic::Vitals,
        Topic::Adherence,
        Topic::DialogueHighlights,
        Topic::Plan,
    ];

    pub fn section_id(self) -> &'static str {
        match self {
            Topic::Medications => "medications",
            Topic::Vitals => "vitals",
            Topic::Adherence => "adherence",
            Topic::DialogueHighlights => "dialogue-highlights",
            Topic::Plan => "plan",
        }
    }

    pub fn title(self) -> &'static str {
        match self {
            Topic::Medications => "Medications",
            Topic::Vitals => "Vital signs",
            Topic::Adherence => "Adherence",
            Topic::DialogueHighlights => "Dialogue highlights",
            Topic::Plan => "Plan",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MoveTag {
    WhatHappened,
    WhyItMatters,
    WhatToDo,
}

impl MoveTag {
    pub const ORDER: [MoveTag; 3] = [MoveTag::WhatHappened, MoveTag::WhyItMatters, MoveTag::WhatToDo];

    pub fn as_str(self) -> &'static str {
        match self {
            MoveTag::WhatHappened => "what_happened",
            MoveTag::WhyItMatters => "why_it_matters",
            MoveTag::WhatToDo => "what_to_do",
        }
    }

    pub fn heading(self) -> &'static str {
        match self {
            MoveTag::WhatHappened => "What happened",
            MoveTag::WhyItMatters => "Why it matters",
            MoveTag::WhatToDo => "What to do",
        }
    }
}

impl fmt::Display for MoveTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for MoveTag {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        MoveTag::ORDER
            .into_iter()
            .find(|t| t.as_str() == s)
            .ok_or_else(|| format!("unknown move `{s}`"))
    }
}

/// The three moves of one section. Serialized as an ordered list of
/// `{tag, text}` entries; any other shape is rejected on input.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Moves {
    pub what_happened: String,
    pub why_it_matters: String,
    pub what_to_do: String,
}

impl Moves {
    pub fn new(
        what_happened: impl Into<String>,
        why_it_matters: impl Into<String>,
        what_to_do: impl Into<String>,
    ) -> Self {
        Self {
            what_happened: what_happened.into(),
            why_it_matters: why_it_matters.into(),
            what_to_do: what_to_do.into(),
        }
    }

    pub fn get(&self, tag: MoveTag) -> &str {
        match tag {
            MoveTag::WhatHappened => &self.what_happened,
            MoveTag::WhyItMatters => &self.why_it_matters,
            MoveTag::WhatToDo => &self.what_to_do,
        }
    }

    pub fn get_mut(&mut self, tag: MoveTag) -> &mut String {
        match tag {
            MoveTag::WhatHappened => &mut self.what_happened,
            MoveTag::WhyItMatters => &mut self.why_it_matters,
            MoveTag::WhatToDo => &mut self.what_to_do,
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (MoveTag, &str)> {
        MoveTag::ORDER.into_iter().map(move |t| (t, self.get(t)))
    }
}

#[derive(Serialize, Deserialize)]
struct TaggedMove {
    tag: MoveTag,
    text: String,
}

impl Serialize for Moves {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let list: Vec<TaggedMove> = self
            .iter()
            .map(|(tag, text)| TaggedMove {
                tag,
                text: text.to_string(),
            })
            .collect();
        list.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Moves {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let list = Vec::<TaggedMove>::deserialize(deserializer)?;
        let tags: Vec<MoveTag> = list.iter().map(|m| m.tag).collect();
        if tags != MoveTag::ORDER {
            return Err(serde::de::Error::custom(
                "moves must be exactly what_happened, why_it_matters, what_to_do in that order",
            ));
        }
        let mut texts = list.into_iter().map(|m| m.text);
        Ok(Moves::new(
            texts.next().unwrap_or_default(),
            texts.next().unwrap_or_default(),
            texts.next().unwrap_or_default(),
        ))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Origin {
    Template,
    ExternalModel,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DraftSection {
    pub section_id: String,
    pub topic: Topic,
    pub moves: Moves,
    pub gap_statements: Vec<String>,
    pub chart_refs: Vec<String>,
    pub origin: Origin,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DraftReport {
    pub case_id: CaseId,
    pub sections: Vec<DraftSection>,
    pub urgency: UrgencyLabel,
    pub generated_at: Timestamp,
    pub generator_config_digest: String,
}

/// Everything in a report except its generation time.
#[derive(Serialize)]
pub struct DraftDigestView<'a> {
    pub case_id: &'a CaseId,
    pub sections: &'a [DraftSection],
    pub urgency: UrgencyLabel,
    pub generator_config_digest: &'a str,
}

impl DraftReport {
    pub fn digest_view(&self) -> DraftDigestView<'_> {
        DraftDigestView {
            case_id: &self.case_id,
            sections: &self.sections,
            urgency: self.urgency,
            generator_config_digest: &self.generator_config_digest,
        }
    }

    /// Content digest that ignores `generated_at`.
    pub fn content_digest(&self) -> String {
        digest_json(&self.digest_view())
    }

    pub fn section(&self, section_id: &str) -> Option<&DraftSection> {
        self.sections.iter().find(|s| s.section_id == section_id)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Backend {
    Template,
    External,
}

impl FromStr for Backend {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "template" => Ok(Backend::Template),
            "external" => Ok(Backend::External),
            other => Err(format!("unknown backend `{other}`")),
        }
    }
}

/// Missing fields in a config file take their default values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GeneratorConfig {
    pub backend: Backend,
    pub model_id: String,
    pub temperature: f64,
    pub max_tokens: u32,
    pub endpoint_url: String,
    pub timeout_seconds: u64,
    /// Upper bound on in-flight section requests.
    pub max_concurrency: usize,
    /// Substitute the template section when a request fails.
    pub fallback_to_template: bool,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        Self {
            backend: Backend::Template,
            model_id: "Qwen3-8B".to_string(),
            temperature: 0.7,
            max_tokens: 1200,
            endpoint_url: String::new(),
            timeout_seconds: 30,
            max_concurrency: 4,
            fallback_to_template: true,
        }
    }
}

pub const GEN_URL_ENV: &str = "ADHERENCE_GEN_URL";
pub const GEN_KEY_ENV: &str = "ADHERENCE_GEN_KEY";

impl GeneratorConfig {
    pub fn external(endpoint_url: impl Into<String>) -> Self {
        Self {
            backend: Backend::External,
            endpoint_url: endpoint_url.into(),
            ..Self::default()
        }
    }

    /// Take the endpoint from `ADHERENCE_GEN_URL` when it is set.
    pub fn with_env(mut self) -> Self {
        if let Ok(url) = std::env::var(GEN_URL_ENV) {
            if !url.trim().is_empty() {
                self.endpoint_url = url;
            }
        }
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.temperature >= 0.0 && self.temperature.is_finite()) {
            return Err(Error::Config("temperature must be >= 0".into()));
        }
        if self.max_tokens < 1 {
            return Err(Error::Config("max_tokens must be >= 1".into()));
        }
        if self.max_concurrency < 1 {
            return Err(Error::Config("max_concurrency must be >= 1".into()));
        }
        Ok(())
    }

    pub fn digest(&self) -> String {
        digest_json(self)
    }
}

/// Generate, pair and persist the draft for one triaged case.
pub fn draft_case(
    store: &CaseStore,
    case_id: &CaseId,
    config: &GeneratorConfig,
    backend: Option<&dyn ChatBackend>,
) -> Result<DraftReport> {
    store.with_case_lock(case_id, || {
        let (report, charts) = prepare_draft(store, case_id, config, backend)?;
        store.save_draft(case_id, report.clone(), charts)?;
        Ok(report)
    })
}

/// Generate and pair a draft without persisting it.
pub fn prepare_draft(
    store: &CaseStore,
    case_id: &CaseId,
    config: &GeneratorConfig,
    backend: Option<&dyn ChatBackend>,
) -> Result<(DraftReport, Vec<ChartSpec>)> {
    config.validate()?;
    let case = store.get_case(case_id)?;
    let triage = store
        .triage(case_id)
        .ok_or_else(|| Error::MissingTriage(case_id.clone()))?;
    let charts = build_charts(&case, &triage);
    let now = store.now();

    let mut report = match (config.backend, backend) {
        (Backend::Template, _) => generate_template_draft(&case, &triage, &charts, now)?,
        (Backend::External, Some(backend)) => {
            generate_external_draft(&case, &triage, &charts, config, backend, now)?
        }
        (Backend::External, None) if config.fallback_to_template => {
            generate_template_draft(&case, &triage, &charts, now)?
        }
        (Backend::External, None) => {
            return Err(Error::ServiceUnreachable(
                "no generation endpoint configured".to_string(),
            ))
        }
    };
    report.generator_config_digest = config.digest();
    Ok((report, charts))
}
