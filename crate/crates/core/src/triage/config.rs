use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::domain::{ConditionRef, PatientCase, VitalType};
use crate::error::{Error, Result};

/// Shipped default configuration.
pub const DEFAULT_TRIAGE_CONFIG: &str = include_str!("../../config/triage.toml");

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VitalRange {
    pub low: f64,
    pub high: f64,
}

impl VitalRange {
    pub fn contains(&self, value: f64) -> bool {
        self.low <= value && value <= self.high
    }

    /// Tighter of two ranges: the larger low and the smaller high.
    pub fn intersect(&self, other: &VitalRange) -> VitalRange {
        VitalRange {
            low: self.low.max(other.low),
            high: self.high.min(other.high),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TriageConfig {
    pub deviation_urgent_count: u32,
    pub deviation_attention_count: u32,
    pub adherence_urgent_below: f64,
    pub adherence_attention_below: f64,
    pub critical_coverage_minimum: f64,
    #[serde(default = "default_timeout")]
    pub estimator_timeout_seconds: u64,
    #[serde(default)]
    pub slope_alert: BTreeMap<VitalType, f64>,
    #[serde(default)]
    pub thresholds: BTreeMap<ConditionRef, BTreeMap<VitalType, VitalRange>>,
}

fn default_timeout() -> u64 {
    30
}

impl Default for TriageConfig {
    fn default() -> Self {
        Self::from_toml(DEFAULT_TRIAGE_CONFIG).expect("shipped triage config is valid")
    }
}

impl TriageConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let config: TriageConfig =
            toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::Config(msg));
        if self.deviation_urgent_count < 1 || self.deviation_attention_count < 1 {
            return fail("deviation counts must be at least 1".into());
        }
        let (u, a) = (self.adherence_urgent_below, self.adherence_attention_below);
        if !(0.0 <= u && u < a && a <= 1.0) {
            return fail(format!(
                "need 0 <= adherence_urgent_below ({u}) < adherence_attention_below ({a}) <= 1"
            ));
        }
        if !(self.critical_coverage_minimum > 0.0 && self.critical_coverage_minimum.is_finite()) {
            return fail("critical_coverage_minimum must be positive".into());
        }
        for (vital, slope) in &self.slope_alert {
            if !(slope.is_finite() && *slope >= 0.0) {
                return fail(format!("slope_alert.{vital} must be a non-negative number"));
            }
        }
        for (condition, ranges) in &self.thresholds {
            for (vital, range) in ranges {
                if !(range.low < range.high) {
                    return fail(format!(
                        "thresholds.{condition}.{vital}: low must be below high"
                    ));
                }
            }
        }
        Ok(())
    }

    /// Threshold range for a vital given all of the case's conditions.
    /// Multiple conditions intersect so the tighter bound wins.
    pub fn applicable_range(&self, case: &PatientCase, vital: VitalType) -> Option<VitalRange> {
        case.conditions
            .iter()
            .filter_map(|c| self.thresholds.get(c).and_then(|m| m.get(&vital)))
            .copied()
            .reduce(|a, b| a.intersect(&b))
    }

    pub fn slope_threshold(&self, vital: VitalType) -> Option<f64> {
        self.slope_alert.get(&vital).copied()
    }
}
