//! Single-parameter threshold detection.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::config::ConfigError;
use crate::model::{AlertType, CandidateAlert, DeviceStatus, Reading, TaggedValue};
use crate::provenance::SpecialistView;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SentinelConfig {
    pub spo2_low_threshold: f64,
    pub hr_high_threshold: f64,
    pub hr_low_threshold: f64,
}

impl Default for SentinelConfig {
    fn default() -> Self {
        Self {
            spo2_low_threshold: 94.0,
            hr_high_threshold: 100.0,
            hr_low_threshold: 50.0,
        }
    }
}

impl SentinelConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        let positive = [self.spo2_low_threshold, self.hr_high_threshold, self.hr_low_threshold]
            .iter()
            .all(|v| v.is_finite() && *v > 0.0);
        if !positive {
            return Err(ConfigError::invalid("sentinel", "thresholds must be positive"));
        }
        if self.hr_low_threshold >= self.hr_high_threshold {
            return Err(ConfigError::invalid("sentinel", "hr_low_threshold must be below hr_high_threshold"));
        }
        Ok(())
    }
}

/// Raises at most one alert for the epoch behind `view`. Comparisons are
/// strict, so a reading exactly on a threshold does not fire. Fields missing
/// from the view cannot fire anything.
pub fn detect(view: &SpecialistView, cfg: &SentinelConfig) -> Option<CandidateAlert> {
    let mut fired: BTreeMap<AlertType, TaggedValue<Reading>> = BTreeMap::new();

    if let Some(spo2) = &view.spo2 {
        if spo2.get() < cfg.spo2_low_threshold {
            fired.insert(AlertType::LowSpo2, spo2.clone().map(Reading::Number));
        }
    }
    if let Some(hr) = &view.hr {
        if hr.get() > cfg.hr_high_threshold {
            fired.insert(AlertType::HighHr, hr.clone().map(Reading::Number));
        } else if hr.get() < cfg.hr_low_threshold {
            fired.insert(AlertType::LowHr, hr.clone().map(Reading::Number));
        }
    }
    if let Some(status) = &view.device_status {
        if status.get() != DeviceStatus::Ok {
            fired.insert(AlertType::SignalQuality, status.clone().map(Reading::Status));
        }
    }

    if fired.is_empty() {
        return None;
    }
    Some(CandidateAlert {
        patient_id: view.patient_id,
        alert_types: fired.keys().copied().collect::<BTreeSet<_>>(),
        triggering_values: fired,
        view: view.clone(),
        raised_at: view.timestamp,
    })
}
