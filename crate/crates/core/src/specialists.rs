//! The six domain evaluators.
//!
//! Each one is a pure function of the routed alert (which carries the
//! projected record) and [`SpecialistConfig`]. None of them can see a field
//! that projection removed.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::ConfigError;
use crate::model::{
    is_nocturnal, AgentClaim, AgentDomain, AlertType, CandidateAlert, DeviceStatus, Position, Recommendation,
    SelfReportedActivity,
};
use crate::routing::RoutingDecision;

/// SpO2 assumed for the nocturnal dip rule when no EHR baseline exists.
pub const DEFAULT_BASELINE_SPO2: f64 = 96.0;
/// How far below a COPD patient's own baseline SpO2 may sit and still be
/// considered usual for them.
pub const COPD_BASELINE_MARGIN: f64 = 2.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SpecialistConfig {
    pub copd_acceptable_spo2: f64,
    pub hr_activity_allowance: f64,
    pub nocturnal_dip_allowance: f64,
    pub bradycardia_personal_floor: f64,
    pub high_confidence: f64,
    pub low_confidence: f64,
}

impl Default for SpecialistConfig {
    fn default() -> Self {
        Self {
            copd_acceptable_spo2: 86.0,
            hr_activity_allowance: 20.0,
            nocturnal_dip_allowance: 3.0,
            bradycardia_personal_floor: 40.0,
            high_confidence: 0.9,
            low_confidence: 0.4,
        }
    }
}

impl SpecialistConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if !(0.0 <= self.low_confidence && self.low_confidence < self.high_confidence && self.high_confidence <= 1.0) {
            return Err(ConfigError::invalid(
                "specialists",
                "confidences must satisfy 0 <= low_confidence < high_confidence <= 1",
            ));
        }
        if !(self.copd_acceptable_spo2 > 0.0 && self.copd_acceptable_spo2 < 94.0) {
            return Err(ConfigError::invalid("specialists", "copd_acceptable_spo2 must be in (0, 94)"));
        }
        let non_negative = [
            self.hr_activity_allowance,
            self.nocturnal_dip_allowance,
            self.bradycardia_personal_floor,
        ];
        if non_negative.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(ConfigError::invalid("specialists", "allowances and floors must be non-negative"));
        }
        Ok(())
    }

    fn suppress(&self, d: AgentDomain, why: &str) -> AgentClaim {
        AgentClaim::new(d, Recommendation::Suppress, self.high_confidence, why)
    }

    fn escalate(&self, d: AgentDomain, why: &str) -> AgentClaim {
        AgentClaim::new(d, Recommendation::Escalate, self.high_confidence, why)
    }

    fn unsure(&self, d: AgentDomain, why: &str) -> AgentClaim {
        AgentClaim::new(d, Recommendation::Indeterminate, self.low_confidence, why)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SpecialistError {
    #[error("{0} was asked for a claim on an alert not routed to it")]
    NotRoutedHere(AgentDomain),
}

pub fn evaluate_probe_integrity(alert: &CandidateAlert, cfg: &SpecialistConfig) -> AgentClaim {
    const D: AgentDomain = AgentDomain::ProbeIntegrity;
    match alert.view.device_status() {
        Some(DeviceStatus::MotionArtefact | DeviceStatus::ProbeCover) => cfg.suppress(D, "artefact_flagged"),
        Some(DeviceStatus::SystemFlag) => cfg.unsure(D, "system_flag_no_context"),
        Some(DeviceStatus::Ok) => cfg.unsure(D, "no_artefact_evidence"),
        Some(DeviceStatus::ThresholdMarginal) => cfg.unsure(D, "threshold_marginal"),
        Some(DeviceStatus::DuplicateAlert) => cfg.unsure(D, "duplicate_alert"),
        None => cfg.unsure(D, "status_unavailable"),
    }
}

pub fn evaluate_activity_integrity(alert: &CandidateAlert, cfg: &SpecialistConfig) -> AgentClaim {
    const D: AgentDomain = AgentDomain::ActivityIntegrity;
    let moving = alert.view.in_motion();
    match (moving, alert.view.self_reported_activity()) {
        (true, None | Some(SelfReportedActivity::Walking | SelfReportedActivity::Exercising)) => {
            cfg.suppress(D, "consistent_motion")
        }
        (true, Some(SelfReportedActivity::Resting)) => cfg.unsure(D, "activity_contradiction"),
        (false, Some(r)) if r.implies_motion() => cfg.unsure(D, "activity_contradiction"),
        (false, _) => cfg.escalate(D, "no_activity_explanation"),
    }
}

pub fn evaluate_tachycardia(alert: &CandidateAlert, cfg: &SpecialistConfig) -> AgentClaim {
    const D: AgentDomain = AgentDomain::Tachycardia;
    let v = &alert.view;
    let Some(hr) = v.hr().filter(|_| alert.has(AlertType::HighHr)) else {
        return cfg.unsure(D, "no_high_hr");
    };
    if v.in_motion() {
        return cfg.suppress(D, "activity_context");
    }
    if v.baseline_hr().is_some_and(|b| hr <= b + cfg.hr_activity_allowance) {
        return cfg.suppress(D, "within_baseline_allowance");
    }
    if v.device_status().is_some_and(|s| s != DeviceStatus::Ok) {
        return cfg.suppress(D, "device_status_flagged");
    }
    cfg.escalate(D, "isolated_high_hr")
}

pub fn evaluate_bradycardia(alert: &CandidateAlert, cfg: &SpecialistConfig) -> AgentClaim {
    const D: AgentDomain = AgentDomain::Bradycardia;
    let v = &alert.view;
    let Some(hr) = v.hr().filter(|_| alert.has(AlertType::LowHr)) else {
        return cfg.unsure(D, "no_low_hr");
    };
    if hr < cfg.bradycardia_personal_floor {
        return cfg.escalate(D, "below_personal_floor");
    }
    if v.rate_limiting_medication() {
        cfg.suppress(D, "rate_limiting_medication")
    } else if is_nocturnal(&v.timestamp) {
        cfg.suppress(D, "nocturnal_bradycardia")
    } else {
        cfg.escalate(D, "unexplained_bradycardia")
    }
}

pub fn evaluate_copd(alert: &CandidateAlert, cfg: &SpecialistConfig) -> AgentClaim {
    const D: AgentDomain = AgentDomain::Copd;
    let v = &alert.view;
    let spo2 = match v.spo2() {
        Some(s) if alert.has(AlertType::LowSpo2) && v.copd_documented() => s,
        _ => return cfg.unsure(D, "not_applicable"),
    };
    let floor = match v.baseline_spo2() {
        Some(b) => cfg.copd_acceptable_spo2.max(b - COPD_BASELINE_MARGIN),
        None => cfg.copd_acceptable_spo2,
    };
    if spo2 >= floor {
        cfg.suppress(D, "within_copd_baseline")
    } else {
        cfg.escalate(D, "below_copd_floor")
    }
}

pub fn evaluate_nocturnal(alert: &CandidateAlert, cfg: &SpecialistConfig) -> AgentClaim {
    const D: AgentDomain = AgentDomain::Nocturnal;
    let v = &alert.view;
    if !is_nocturnal(&v.timestamp) {
        return cfg.unsure(D, "outside_nocturnal_window");
    }
    if v.position() != Some(Position::Supine) {
        return cfg.unsure(D, "non_supine");
    }
    if v.accel_level().is_none() || v.in_motion() {
        return cfg.unsure(D, "not_at_rest");
    }
    if alert.has(AlertType::LowSpo2) {
        let baseline = v.baseline_spo2().unwrap_or(DEFAULT_BASELINE_SPO2);
        let dip_ok = v.spo2().is_some_and(|s| baseline - s <= cfg.nocturnal_dip_allowance);
        if !dip_ok {
            return cfg.unsure(D, "dip_exceeds_allowance");
        }
    }
    cfg.suppress(D, "nocturnal_pattern")
}

/// Claim from one domain, refusing domains the alert was not routed to.
pub fn evaluate(
    domain: AgentDomain,
    alert: &CandidateAlert,
    routing: &RoutingDecision,
    cfg: &SpecialistConfig,
) -> Result<AgentClaim, SpecialistError> {
    if !routing.targets.contains(&domain) {
        return Err(SpecialistError::NotRoutedHere(domain));
    }
    Ok(match domain {
        AgentDomain::ProbeIntegrity => evaluate_probe_integrity(alert, cfg),
        AgentDomain::ActivityIntegrity => evaluate_activity_integrity(alert, cfg),
        AgentDomain::Tachycardia => evaluate_tachycardia(alert, cfg),
        AgentDomain::Bradycardia => evaluate_bradycardia(alert, cfg),
        AgentDomain::Copd => evaluate_copd(alert, cfg),
        AgentDomain::Nocturnal => evaluate_nocturnal(alert, cfg),
    })
}

/// One claim per routed domain, in domain enumeration order.
pub fn evaluate_routed(alert: &CandidateAlert, routing: &RoutingDecision, cfg: &SpecialistConfig) -> Vec<AgentClaim> {
    routing
        .targets
        .iter()
        .map(|d| evaluate(*d, alert, routing, cfg).expect("domain taken from routing targets"))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{AccelLevel, Epoch, PatientContext, ProvenanceTag, TaggedValue, PATIENT_ID_MIN};
    use crate::provenance::{assemble, project_for_specialists, SourceBundle};
    use crate::routing::route;
    use crate::sentinel::{detect, SentinelConfig};
    use chrono::{TimeZone, Utc};
    use proptest::prelude::*;
    use std::collections::BTreeSet;
    use Recommendation::*;

    #[derive(Clone, Debug)]
    struct Case {
        spo2: f64,
        hr: f64,
        status: DeviceStatus,
        accel: AccelLevel,
        position: Position,
        report: Option<SelfReportedActivity>,
        copd: bool,
        baseline_spo2: Option<f64>,
        baseline_hr: Option<f64>,
        medication: bool,
        hour: u32,
        minute: u32,
    }

    impl Default for Case {
        fn default() -> Self {
            Self {
                spo2: 97.0,
                hr: 72.0,
                status: DeviceStatus::Ok,
                accel: AccelLevel::Still,
                position: Position::Upright,
                report: None,
                copd: false,
                baseline_spo2: None,
                baseline_hr: None,
                medication: false,
                hour: 14,
                minute: 0,
            }
        }
    }

    impl Case {
        fn alert(&self) -> CandidateAlert {
            let at = Utc.with_ymd_and_hms(2022, 7, 19, self.hour, self.minute, 0).unwrap();
            let e = Epoch {
                patient_id: PATIENT_ID_MIN,
                timestamp: at,
                spo2: self.spo2,
                hr: self.hr,
                accel_level: self.accel,
                device_status: self.status,
                probe_cover_present: self.status == DeviceStatus::ProbeCover,
                position: self.position,
                self_reported_activity: self.report,
                ambient_condition: None,
            };
            let ctx = PatientContext {
                patient_id: PATIENT_ID_MIN,
                copd_documented: self.copd,
                baseline_spo2: self.baseline_spo2,
                baseline_hr: self.baseline_hr,
                rate_limiting_medication: self.medication,
            };
            let view = project_for_specialists(&assemble(&SourceBundle::from_epochs(ctx, vec![e]), at).unwrap());
            detect(&view, &SentinelConfig::default()).expect("case must alert")
        }
    }

    fn rc(c: &AgentClaim) -> (Recommendation, f64, &str) {
        (c.recommendation, c.confidence, c.rationale_codes[0].as_str())
    }

    fn cfg() -> SpecialistConfig {
        SpecialistConfig::default()
    }

    #[test]
    fn probe_integrity_branches() {
        let claim = |status, spo2| evaluate_probe_integrity(&Case { status, spo2, ..Default::default() }.alert(), &cfg());
        assert_eq!(rc(&claim(DeviceStatus::ProbeCover, 90.0)), (Suppress, 0.9, "artefact_flagged"));
        assert_eq!(rc(&claim(DeviceStatus::MotionArtefact, 90.0)), (Suppress, 0.9, "artefact_flagged"));
        assert_eq!(rc(&claim(DeviceStatus::SystemFlag, 90.0)), (Indeterminate, 0.4, "system_flag_no_context"));
        assert_eq!(rc(&claim(DeviceStatus::Ok, 90.0)), (Indeterminate, 0.4, "no_artefact_evidence"));
        assert_eq!(rc(&claim(DeviceStatus::ThresholdMarginal, 90.0)), (Indeterminate, 0.4, "threshold_marginal"));
        assert_eq!(rc(&claim(DeviceStatus::DuplicateAlert, 90.0)), (Indeterminate, 0.4, "duplicate_alert"));
        let mut a = Case { spo2: 90.0, ..Default::default() }.alert();
        a.view.device_status = None;
        assert_eq!(rc(&evaluate_probe_integrity(&a, &cfg())), (Indeterminate, 0.4, "status_unavailable"));
    }

    // Oracle: truth table written out by hand over (accel, self-report).
    #[test]
    fn activity_truth_table() {
        use SelfReportedActivity::*;
        let reports = [None, Some(Resting), Some(Walking), Some(Exercising)];
        let expected = |accel: AccelLevel, r: Option<SelfReportedActivity>| match (accel, r) {
            (AccelLevel::Still, None | Some(Resting)) => Escalate,
            (AccelLevel::Still, _) => Indeterminate,
            (_, Some(Resting)) => Indeterminate,
            _ => Suppress,
        };
        for accel in AccelLevel::ALL {
            for r in reports {
                let a = Case { hr: 115.0, accel: *accel, report: r, ..Default::default() }.alert();
                assert_eq!(evaluate_activity_integrity(&a, &cfg()).recommendation, expected(*accel, r), "{accel} {r:?}");
            }
        }
        let a = Case { hr: 115.0, accel: AccelLevel::Vigorous, report: Some(Exercising), ..Default::default() }.alert();
        assert_eq!(rc(&evaluate_activity_integrity(&a, &cfg())), (Suppress, 0.9, "consistent_motion"));
        let a = Case { hr: 115.0, report: Some(Walking), ..Default::default() }.alert();
        assert_eq!(rc(&evaluate_activity_integrity(&a, &cfg())), (Indeterminate, 0.4, "activity_contradiction"));
        let a = Case { hr: 115.0, report: Some(Resting), ..Default::default() }.alert();
        assert_eq!(rc(&evaluate_activity_integrity(&a, &cfg())), (Escalate, 0.9, "no_activity_explanation"));
    }

    #[test]
    fn tachycardia_branches() {
        let t = |c: Case| rc(&evaluate_tachycardia(&c.alert(), &cfg())).2.to_string();
        // 108 <= 95 + 20
        assert_eq!(t(Case { hr: 108.0, baseline_hr: Some(95.0), ..Default::default() }), "within_baseline_allowance");
        assert_eq!(t(Case { hr: 116.0, baseline_hr: Some(95.0), ..Default::default() }), "isolated_high_hr");
        assert_eq!(t(Case { hr: 115.0, baseline_hr: Some(95.0), ..Default::default() }), "within_baseline_allowance");
        assert_eq!(t(Case { hr: 130.0, ..Default::default() }), "isolated_high_hr");
        assert_eq!(t(Case { hr: 130.0, accel: AccelLevel::Light, ..Default::default() }), "activity_context");
        assert_eq!(t(Case { hr: 130.0, status: DeviceStatus::SystemFlag, ..Default::default() }), "device_status_flagged");
        assert_eq!(t(Case { spo2: 90.0, ..Default::default() }), "no_high_hr");
        let a = Case { hr: 130.0, ..Default::default() }.alert();
        assert_eq!(rc(&evaluate_tachycardia(&a, &cfg())), (Escalate, 0.9, "isolated_high_hr"));
    }

    #[test]
    fn bradycardia_branches() {
        let b = |c: Case| {
            let claim = evaluate_bradycardia(&c.alert(), &cfg());
            (claim.recommendation, claim.rationale_codes[0].clone())
        };
        assert_eq!(b(Case { hr: 46.0, medication: true, ..Default::default() }), (Suppress, "rate_limiting_medication".into()));
        assert_eq!(b(Case { hr: 35.0, medication: true, hour: 2, ..Default::default() }), (Escalate, "below_personal_floor".into()));
        assert_eq!(b(Case { hr: 47.0, hour: 2, ..Default::default() }), (Suppress, "nocturnal_bradycardia".into()));
        assert_eq!(b(Case { hr: 47.0, ..Default::default() }), (Escalate, "unexplained_bradycardia".into()));
        assert_eq!(b(Case { hr: 40.0, medication: true, ..Default::default() }).0, Suppress);
        assert_eq!(b(Case { spo2: 90.0, ..Default::default() }), (Indeterminate, "no_low_hr".into()));
    }

    #[test]
    fn copd_branches() {
        let c = |spo2, baseline| {
            let a = Case { spo2, copd: true, baseline_spo2: Some(baseline), ..Default::default() }.alert();
            rc(&evaluate_copd(&a, &cfg())).0
        };
        // floor = max(86, 90 - 2) = 88
        assert_eq!(c(89.0, 90.0), Suppress);
        assert_eq!(c(87.9, 90.0), Escalate);
        assert_eq!(c(85.0, 84.0), Escalate);
        assert_eq!(c(86.0, 87.0), Suppress);
        let a = Case { spo2: 85.0, copd: true, baseline_spo2: Some(86.0), ..Default::default() }.alert();
        assert_eq!(rc(&evaluate_copd(&a, &cfg())), (Escalate, 0.9, "below_copd_floor"));
        let a = Case { spo2: 90.0, ..Default::default() }.alert();
        assert_eq!(rc(&evaluate_copd(&a, &cfg())).2, "not_applicable");
        let a = Case { spo2: 90.0, copd: true, baseline_spo2: Some(91.0), ..Default::default() }.alert();
        assert_eq!(rc(&evaluate_copd(&a, &cfg())).2, "within_copd_baseline");
    }

    #[test]
    fn nocturnal_branches() {
        let n = |c: Case| rc(&evaluate_nocturnal(&c.alert(), &cfg())).2.to_string();
        let night = Case { spo2: 93.2, baseline_spo2: Some(96.0), position: Position::Supine, hour: 2, minute: 30, ..Default::default() };
        assert_eq!(n(night.clone()), "nocturnal_pattern");
        // dip rule defaults to a 96% baseline
        assert_eq!(n(Case { baseline_spo2: None, ..night.clone() }), "nocturnal_pattern");
        assert_eq!(n(Case { spo2: 92.9, ..night.clone() }), "dip_exceeds_allowance");
        assert_eq!(n(Case { hour: 14, ..night.clone() }), "outside_nocturnal_window");
        assert_eq!(n(Case { position: Position::Upright, ..night.clone() }), "non_supine");
        assert_eq!(n(Case { accel: AccelLevel::Light, ..night.clone() }), "not_at_rest");
        assert_eq!(n(Case { spo2: 97.0, hr: 45.0, ..night.clone() }), "nocturnal_pattern");
        let a = night.alert();
        assert_eq!(rc(&evaluate_nocturnal(&a, &cfg())), (Suppress, 0.9, "nocturnal_pattern"));
        let a = Case { position: Position::Upright, ..night }.alert();
        assert_eq!(rc(&evaluate_nocturnal(&a, &cfg())), (Indeterminate, 0.4, "non_supine"));
    }

    #[test]
    fn unrouted_domain_is_refused() {
        let a = Case { hr: 130.0, ..Default::default() }.alert();
        let r = route(&a);
        assert_eq!(r.targets, BTreeSet::from([AgentDomain::Tachycardia]));
        assert_eq!(evaluate(AgentDomain::Copd, &a, &r, &cfg()), Err(SpecialistError::NotRoutedHere(AgentDomain::Copd)));
        assert!(evaluate(AgentDomain::Tachycardia, &a, &r, &cfg()).is_ok());
    }

    #[test]
    fn routed_claims_come_in_domain_order() {
        let a = Case { spo2: 89.0, hr: 120.0, status: DeviceStatus::MotionArtefact, accel: AccelLevel::Light, copd: true, baseline_spo2: Some(90.0), hour: 23, ..Default::default() }.alert();
        let claims = evaluate_routed(&a, &route(&a), &cfg());
        let order: Vec<_> = claims.iter().map(|c| c.domain).collect();
        let mut sorted = order.clone();
        sorted.sort();
        assert_eq!(order, sorted);
        assert_eq!(order.len(), 5);
    }

    #[test]
    fn hidden_copd_flag_disables_copd_suppression() {
        let mut a = Case { spo2: 89.0, copd: true, baseline_spo2: Some(90.0), ..Default::default() }.alert();
        a.view.copd_documented = None;
        assert_eq!(evaluate_copd(&a, &cfg()).recommendation, Indeterminate);
        // a copy of the flag tagged Inferred never gets this far: projection drops it
        let _ = TaggedValue::new(true, ProvenanceTag::Inferred, "llm", a.view.timestamp);
    }

    #[test]
    fn config_validation() {
        assert!(cfg().validate().is_ok());
        assert!(SpecialistConfig { low_confidence: 0.95, ..cfg() }.validate().is_err());
        assert!(SpecialistConfig { copd_acceptable_spo2: 94.0, ..cfg() }.validate().is_err());
        assert!(SpecialistConfig { high_confidence: 1.5, ..cfg() }.validate().is_err());
    }

    proptest! {
        // Hard floor dominates every other field.
        #[test]
        fn copd_guardrail_dominates(
            spo2 in 70.0f64..86.0,
            baseline in 70.0f64..100.0,
            hr in 25.0f64..220.0,
            status in proptest::sample::select(DeviceStatus::ALL),
            accel in proptest::sample::select(AccelLevel::ALL),
            position in proptest::sample::select(Position::ALL),
            hour in 0u32..24,
            medication in any::<bool>(),
        ) {
            let a = Case { spo2, hr, status, accel, position, copd: true, baseline_spo2: Some(baseline), medication, hour, ..Default::default() }.alert();
            prop_assert_eq!(evaluate_copd(&a, &cfg()).recommendation, Escalate);
        }

        #[test]
        fn bradycardia_floor_dominates(hr in 25.0f64..40.0, medication in any::<bool>(), hour in 0u32..24) {
            let a = Case { hr, medication, hour, ..Default::default() }.alert();
            prop_assert_eq!(evaluate_bradycardia(&a, &cfg()).recommendation, Escalate);
        }
    }
}
