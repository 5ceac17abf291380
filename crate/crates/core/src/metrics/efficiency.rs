use serde::{Deserialize, Serialize};

use crate::error::MetricError;

/// Valid tokens produced over a wall-clock interval. The rate is derived on
/// demand and never stored.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EfficiencyRecord {
    pub valid_tokens: u64,
    pub elapsed_secs: f64,
    #[serde(default)]
    pub hardware_tag: String,
}

impl EfficiencyRecord {
    pub fn new(
        valid_tokens: u64,
        elapsed_secs: f64,
        hardware_tag: impl Into<String>,
    ) -> Result<Self, MetricError> {
        if !(elapsed_secs > 0.0) || !elapsed_secs.is_finite() {
            return Err(MetricError::ZeroRate);
        }
        Ok(Self {
            valid_tokens,
            elapsed_secs,
            hardware_tag: hardware_tag.into(),
        })
    }

    /// Valid tokens per second.
    pub fn rate(&self) -> f64 {
        self.valid_tokens as f64 / self.elapsed_secs
    }
}

/// How many times faster `student` emits valid tokens than `baseline`.
pub fn speedup(student: &EfficiencyRecord, baseline: &EfficiencyRecord) -> Result<f64, MetricError> {
    let (s, b) = (student.rate(), baseline.rate());
    if !(s > 0.0 && b > 0.0) {
        return Err(MetricError::ZeroRate);
    }
    Ok(s / b)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn equal_rates() {
        let a = EfficiencyRecord::new(100, 2.0, "cpu").unwrap();
        let b = EfficiencyRecord::new(50, 1.0, "cpu").unwrap();
        assert_eq!(speedup(&a, &b).unwrap(), 1.0);
    }

    #[test]
    fn ratio() {
        let student = EfficiencyRecord::new(916, 10.0, "a800").unwrap();
        let baseline = EfficiencyRecord::new(40, 10.0, "a800").unwrap();
        assert!((student.rate() - 91.6).abs() < 1e-12);
        assert!((speedup(&student, &baseline).unwrap() - 22.9).abs() < 1e-9);
    }

    #[test]
    fn zero_baseline() {
        let student = EfficiencyRecord::new(10, 1.0, "").unwrap();
        let baseline = EfficiencyRecord::new(0, 1.0, "").unwrap();
        assert_eq!(speedup(&student, &baseline), Err(MetricError::ZeroRate));
        assert_eq!(EfficiencyRecord::new(1, 0.0, "").unwrap_err(), MetricError::ZeroRate);
    }
}
