use serde::{Deserialize, Serialize};

use crate::domain::{PatientCase, VitalType};

use super::config::{TriageConfig, VitalRange};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VitalTrend {
    pub vital_type: VitalType,
    pub unit: String,
    /// In-period samples only.
    pub sample_count: u32,
    /// Least-squares slope in units per day; absent below two samples.
    pub slope: Option<f64>,
    pub deviation_count: u32,
    pub last_value: Option<f64>,
    /// Range the deviations were counted against, if any applies.
    pub range: Option<VitalRange>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrendFindings {
    /// One entry per vital series in the case, in case order.
    pub vitals: Vec<VitalTrend>,
}

impl TrendFindings {
    pub fn get(&self, vital: VitalType) -> Option<&VitalTrend> {
        self.vitals.iter().find(|v| v.vital_type == vital)
    }

    pub fn deviations_total(&self) -> u32 {
        self.vitals.iter().map(|v| v.deviation_count).sum()
    }
}

/// Ordinary least-squares slope of `y` on `x`. `None` for fewer than two
/// points or zero spread in `x`.
pub fn least_squares_slope(points: &[(f64, f64)]) -> Option<f64> {
    if points.len() < 2 {
        return None;
    }
    let n = points.len() as f64;
    let mean_x = points.iter().map(|p| p.0).sum::<f64>() / n;
    let mean_y = points.iter().map(|p| p.1).sum::<f64>() / n;
    let (sxy, sxx) = points.iter().fold((0.0, 0.0), |(sxy, sxx), (x, y)| {
        let dx = x - mean_x;
        (sxy + dx * (y - mean_y), sxx + dx * dx)
    });
    (sxx > 0.0).then(|| sxy / sxx)
}

pub fn detect_trends(case: &PatientCase, config: &TriageConfig) -> TrendFindings {
    let period = &case.reporting_period;
    let vitals = case
        .vitals
        .iter()
        .map(|series| {
            let points: Vec<(f64, f64)> = series
                .samples_in(period)
                .map(|s| (period.day_offset(s.timestamp), s.value))
                .collect();
            let range = config.applicable_range(case, series.vital_type);
            let deviation_count = range
                .map(|r| points.iter().filter(|(_, y)| !r.contains(*y)).count() as u32)
                .unwrap_or(0);
            VitalTrend {
                vital_type: series.vital_type,
                unit: series.unit.clone(),
                sample_count: points.len() as u32,
                slope: least_squares_slope(&points),
                deviation_count,
                last_value: points.last().map(|p| p.1),
                range,
            }
        })
        .collect();
    TrendFindings { vitals }
}
