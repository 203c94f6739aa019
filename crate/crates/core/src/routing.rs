//! Maps a candidate alert to the specialist domains that should judge it.
//!
//! The routing table is fixed:
//!
//! | rule | condition | target |
//! |------|-----------|--------|
//! | a | signal quality with motion artefact, probe cover or system flag | probe integrity |
//! | b | accelerometer not still, or self-reported walking/exercising, and a physiological type fired | activity integrity |
//! | c | high HR | tachycardia |
//! | d | low HR | bradycardia |
//! | e | low SpO2 and documented COPD | COPD |
//! | f | nocturnal window and a physiological type fired | nocturnal |
//! | g | low SpO2, no COPD, nothing else matched | probe integrity |
//! | h | nothing matched at all | probe integrity |
//!
//! Rule h only catches signal-quality alerts whose status is threshold
//! marginal or duplicate alert, which no other rule claims.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::model::{is_nocturnal, AgentDomain, AlertType, CandidateAlert, DeviceStatus};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoutingDecision {
    pub targets: BTreeSet<AgentDomain>,
    /// Set when the device status is too coarse to route with confidence.
    pub ambiguity_flag: bool,
}

impl RoutingDecision {
    pub fn is_single_domain(&self) -> bool {
        self.targets.len() == 1 && !self.ambiguity_flag
    }
}

pub fn route(alert: &CandidateAlert) -> RoutingDecision {
    let view = &alert.view;
    let status = view.device_status();
    let physiological = alert.any_physiological();
    let mut targets = BTreeSet::new();

    if alert.has(AlertType::SignalQuality)
        && matches!(
            status,
            Some(DeviceStatus::MotionArtefact | DeviceStatus::ProbeCover | DeviceStatus::SystemFlag)
        )
    {
        targets.insert(AgentDomain::ProbeIntegrity);
    }
    let reported_motion = view.self_reported_activity().is_some_and(|a| a.implies_motion());
    if physiological && (view.in_motion() || reported_motion) {
        targets.insert(AgentDomain::ActivityIntegrity);
    }
    if alert.has(AlertType::HighHr) {
        targets.insert(AgentDomain::Tachycardia);
    }
    if alert.has(AlertType::LowHr) {
        targets.insert(AgentDomain::Bradycardia);
    }
    let copd = view.copd_documented();
    if alert.has(AlertType::LowSpo2) && copd {
        targets.insert(AgentDomain::Copd);
    }
    if physiological && is_nocturnal(&view.timestamp) {
        targets.insert(AgentDomain::Nocturnal);
    }
    if targets.is_empty() {
        // g when SpO2 fired without COPD, h otherwise
        targets.insert(AgentDomain::ProbeIntegrity);
    }

    RoutingDecision {
        targets,
        ambiguity_flag: matches!(status, Some(DeviceStatus::SystemFlag | DeviceStatus::ThresholdMarginal)),
    }
}
