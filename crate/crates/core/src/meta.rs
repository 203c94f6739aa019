//! Final arbitration over specialist claims.
//!
//! Resolution order: debounce against the patient's recent history, adopt a
//! lone decisive claim whose weighted confidence clears the margin, otherwise compare weighted suppress and escalate
//! mass. Anything that does not clear `resolution_margin` escalates.

use std::collections::{BTreeMap, BTreeSet};

use chrono::Duration;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::ConfigError;
use crate::model::{
    AgentClaim, AgentDomain, AlertType, CandidateAlert, DeviceStatus, Recommendation, ResolutionPath, SystemDecision,
    Timestamp, Verdict,
};
use crate::routing::RoutingDecision;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MetaConfig {
    pub resolution_margin: f64,
    /// Minutes.
    pub cooldown_window: i64,
    pub domain_weights: BTreeMap<AgentDomain, f64>,
}

impl Default for MetaConfig {
    fn default() -> Self {
        Self {
            resolution_margin: 0.3,
            cooldown_window: 10,
            domain_weights: AgentDomain::ALL.iter().map(|d| (*d, 1.0)).collect(),
        }
    }
}

impl MetaConfig {
    pub fn weight(&self, d: AgentDomain) -> f64 {
        self.domain_weights.get(&d).copied().unwrap_or(1.0)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if !(self.resolution_margin > 0.0 && self.resolution_margin < 1.0) {
            return Err(ConfigError::invalid("meta", "resolution_margin must be in (0, 1)"));
        }
        if self.cooldown_window <= 0 {
            return Err(ConfigError::invalid("meta", "cooldown_window must be positive"));
        }
        if self.domain_weights.values().any(|w| !w.is_finite() || *w <= 0.0) {
            return Err(ConfigError::invalid("meta", "domain weights must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistoryEntry {
    pub at: Timestamp,
    pub alert_types: BTreeSet<AlertType>,
    pub decision: SystemDecision,
}

/// Per-patient decision log, strictly increasing in time per patient.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DecisionHistory {
    entries: BTreeMap<u32, Vec<HistoryEntry>>,
}

impl DecisionHistory {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn for_patient(&self, patient_id: u32) -> &[HistoryEntry] {
        self.entries.get(&patient_id).map(Vec::as_slice).unwrap_or(&[])
    }

    fn last_at(&self, patient_id: u32) -> Option<Timestamp> {
        self.for_patient(patient_id).last().map(|e| e.at)
    }

    fn push(&mut self, patient_id: u32, entry: HistoryEntry) {
        self.entries.entry(patient_id).or_default().push(entry);
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MetaError {
    #[error("no specialist claims to resolve")]
    EmptyClaims,
    #[error("patient {patient_id}: alert at {at} is not after the last decision at {last}")]
    OutOfOrder {
        patient_id: u32,
        at: Timestamp,
        last: Timestamp,
    },
}

/// Weighted suppress and escalate mass. Indeterminate claims count toward
/// neither.
pub fn claim_mass(claims: &[AgentClaim], cfg: &MetaConfig) -> (f64, f64) {
    claims.iter().fold((0.0, 0.0), |(s, e), c| {
        let w = cfg.weight(c.domain) * c.confidence;
        match c.recommendation {
            Recommendation::Suppress => (s + w, e),
            Recommendation::Escalate => (s, e + w),
            Recommendation::Indeterminate => (s, e),
        }
    })
}

/// The verdict the weighted rule gives, without debounce or single-domain
/// adoption.
pub fn weighted_verdict(claims: &[AgentClaim], cfg: &MetaConfig) -> (Verdict, ResolutionPath) {
    let (s, e) = claim_mass(claims, cfg);
    if s - e >= cfg.resolution_margin {
        (Verdict::Suppress, ResolutionPath::WeightedAggregation)
    } else if e - s >= cfg.resolution_margin {
        (Verdict::Escalate, ResolutionPath::WeightedAggregation)
    } else {
        (Verdict::Escalate, ResolutionPath::AmbiguityDefault)
    }
}

pub fn resolve(
    claims: &[AgentClaim],
    _routing: &RoutingDecision,
    alert: &CandidateAlert,
    history: &mut DecisionHistory,
    cfg: &MetaConfig,
) -> Result<SystemDecision, MetaError> {
    if claims.is_empty() {
        return Err(MetaError::EmptyClaims);
    }
    let pid = alert.patient_id;
    let now = alert.raised_at;
    if let Some(last) = history.last_at(pid) {
        if now <= last {
            return Err(MetaError::OutOfOrder { patient_id: pid, at: now, last });
        }
    }

    let window = Duration::minutes(cfg.cooldown_window);
    let duplicate = alert.view.device_status() == Some(DeviceStatus::DuplicateAlert);
    let prior = history
        .for_patient(pid)
        .iter()
        .rev()
        .take_while(|h| now - h.at <= window)
        .find(|h| h.alert_types == alert.alert_types);

    let (verdict, resolution_path) = match prior {
        // duplicate-alert status is not recognised by the cooldown
        Some(p) if !duplicate => (p.decision.verdict, ResolutionPath::Debounced),
        _ => match claims {
            // a lone claim too weak to clear the margin is treated as ambiguous
            [only]
                if only.recommendation != Recommendation::Indeterminate
                    && cfg.weight(only.domain) * only.confidence >= cfg.resolution_margin =>
            {
                let v = match only.recommendation {
                    Recommendation::Suppress => Verdict::Suppress,
                    _ => Verdict::Escalate,
                };
                (v, ResolutionPath::SingleDomain)
            }
            _ => weighted_verdict(claims, cfg),
        },
    };

    let decision = SystemDecision {
        verdict,
        contributing_claims: claims.to_vec(),
        resolution_path,
        decided_at: now,
    };
    history.push(
        pid,
        HistoryEntry {
            at: now,
            alert_types: alert.alert_types.clone(),
            decision: decision.clone(),
        },
    );
    Ok(decision)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{AgentClaim, Recommendation};
    use crate::sentinel::detect;
    use crate::sentinel::tests::view_of;
    use crate::sentinel::SentinelConfig;
    use proptest::prelude::*;
    use AgentDomain::*;
    use Recommendation::*;

    fn claim(d: AgentDomain, r: Recommendation, c: f64) -> AgentClaim {
        AgentClaim::new(d, r, c, "test")
    }

    fn alert_at(status: DeviceStatus, minute_offset: i64) -> CandidateAlert {
        let mut a = detect(&view_of(90.0, 72.0, status), &SentinelConfig::default()).unwrap();
        a.raised_at += Duration::minutes(minute_offset);
        a.view.timestamp = a.raised_at;
        a
    }

    fn routing(ds: &[AgentDomain]) -> RoutingDecision {
        RoutingDecision {
            targets: ds.iter().copied().collect(),
            ambiguity_flag: false,
        }
    }

    fn run(claims: &[AgentClaim]) -> SystemDecision {
        let a = alert_at(DeviceStatus::Ok, 0);
        resolve(claims, &routing(&[]), &a, &mut DecisionHistory::new(), &MetaConfig::default()).unwrap()
    }

    #[test]
    fn lone_decisive_claim_is_adopted() {
        let d = run(&[claim(Copd, Suppress, 0.9)]);
        assert_eq!((d.verdict, d.resolution_path), (Verdict::Suppress, ResolutionPath::SingleDomain));
        let d = run(&[claim(Tachycardia, Escalate, 0.9)]);
        assert_eq!((d.verdict, d.resolution_path), (Verdict::Escalate, ResolutionPath::SingleDomain));
    }

    #[test]
    fn weak_lone_claim_is_not_adopted() {
        let d = run(&[claim(Copd, Suppress, 0.2)]);
        assert_eq!((d.verdict, d.resolution_path), (Verdict::Escalate, ResolutionPath::AmbiguityDefault));
    }

    #[test]
    fn lone_indeterminate_claim_defaults_to_escalation() {
        let d = run(&[claim(ProbeIntegrity, Indeterminate, 0.4)]);
        assert_eq!((d.verdict, d.resolution_path), (Verdict::Escalate, ResolutionPath::AmbiguityDefault));
    }

    #[test]
    fn decisive_claim_outweighs_indeterminate() {
        // S = 0.9, E = 0, S - E = 0.9 >= 0.3
        let d = run(&[claim(ProbeIntegrity, Indeterminate, 0.4), claim(Copd, Suppress, 0.9)]);
        assert_eq!((d.verdict, d.resolution_path), (Verdict::Suppress, ResolutionPath::WeightedAggregation));
        // E - S = 0.9
        let d = run(&[claim(ProbeIntegrity, Indeterminate, 0.4), claim(Tachycardia, Escalate, 0.9)]);
        assert_eq!((d.verdict, d.resolution_path), (Verdict::Escalate, ResolutionPath::WeightedAggregation));
    }

    #[test]
    fn balanced_conflict_escalates() {
        let d = run(&[claim(Tachycardia, Suppress, 0.9), claim(Copd, Escalate, 0.9)]);
        assert_eq!((d.verdict, d.resolution_path), (Verdict::Escalate, ResolutionPath::AmbiguityDefault));
        let d = run(&[claim(ProbeIntegrity, Indeterminate, 0.4), claim(Nocturnal, Indeterminate, 0.4)]);
        assert_eq!((d.verdict, d.resolution_path), (Verdict::Escalate, ResolutionPath::AmbiguityDefault));
    }

    #[test]
    fn margin_edge_is_inclusive() {
        // 0.5 - 0.25 is exactly 0.25 in binary
        let cfg = MetaConfig { resolution_margin: 0.25, ..Default::default() };
        let claims = [claim(ProbeIntegrity, Suppress, 0.5), claim(Copd, Escalate, 0.25)];
        assert_eq!(weighted_verdict(&claims, &cfg).0, Verdict::Suppress);
    }

    #[test]
    fn empty_claims_are_an_error() {
        let a = alert_at(DeviceStatus::Ok, 0);
        let err = resolve(&[], &routing(&[]), &a, &mut DecisionHistory::new(), &MetaConfig::default());
        assert_eq!(err, Err(MetaError::EmptyClaims));
    }

    #[test]
    fn repeat_within_cooldown_is_debounced() {
        let cfg = MetaConfig::default();
        let mut h = DecisionHistory::new();
        let first = resolve(&[claim(Copd, Suppress, 0.9)], &routing(&[Copd]), &alert_at(DeviceStatus::Ok, 0), &mut h, &cfg).unwrap();
        assert_eq!(first.verdict, Verdict::Suppress);
        // contradicting claims, but same alert types inside the window
        let again = resolve(&[claim(ProbeIntegrity, Indeterminate, 0.4)], &routing(&[ProbeIntegrity]), &alert_at(DeviceStatus::Ok, 10), &mut h, &cfg).unwrap();
        assert_eq!((again.verdict, again.resolution_path), (Verdict::Suppress, ResolutionPath::Debounced));
        // 10 minutes after the debounced entry is still within the window of it
        let third = resolve(&[claim(ProbeIntegrity, Indeterminate, 0.4)], &routing(&[ProbeIntegrity]), &alert_at(DeviceStatus::Ok, 20), &mut h, &cfg).unwrap();
        assert_eq!(third.resolution_path, ResolutionPath::Debounced);
        // past the window the claims decide again
        let late = resolve(&[claim(ProbeIntegrity, Indeterminate, 0.4)], &routing(&[ProbeIntegrity]), &alert_at(DeviceStatus::Ok, 31), &mut h, &cfg).unwrap();
        assert_eq!((late.verdict, late.resolution_path), (Verdict::Escalate, ResolutionPath::AmbiguityDefault));
        assert_eq!(h.for_patient(alert_at(DeviceStatus::Ok, 0).patient_id).len(), 4);
    }

    #[test]
    fn different_alert_types_are_not_debounced() {
        let cfg = MetaConfig::default();
        let mut h = DecisionHistory::new();
        resolve(&[claim(Copd, Suppress, 0.9)], &routing(&[Copd]), &alert_at(DeviceStatus::Ok, 0), &mut h, &cfg).unwrap();
        let other = alert_at(DeviceStatus::MotionArtefact, 1);
        let d = resolve(&[claim(ProbeIntegrity, Indeterminate, 0.4)], &routing(&[ProbeIntegrity]), &other, &mut h, &cfg).unwrap();
        assert_eq!(d.resolution_path, ResolutionPath::AmbiguityDefault);
    }

    #[test]
    fn duplicate_alert_status_bypasses_cooldown() {
        let cfg = MetaConfig::default();
        let mut h = DecisionHistory::new();
        resolve(&[claim(ProbeIntegrity, Suppress, 0.9)], &routing(&[ProbeIntegrity]), &alert_at(DeviceStatus::DuplicateAlert, 0), &mut h, &cfg).unwrap();
        let d = resolve(&[claim(ProbeIntegrity, Indeterminate, 0.4)], &routing(&[ProbeIntegrity]), &alert_at(DeviceStatus::DuplicateAlert, 1), &mut h, &cfg).unwrap();
        assert_eq!((d.verdict, d.resolution_path), (Verdict::Escalate, ResolutionPath::AmbiguityDefault));
    }

    #[test]
    fn out_of_order_alerts_are_rejected() {
        let cfg = MetaConfig::default();
        let mut h = DecisionHistory::new();
        resolve(&[claim(Copd, Suppress, 0.9)], &routing(&[Copd]), &alert_at(DeviceStatus::Ok, 5), &mut h, &cfg).unwrap();
        let err = resolve(&[claim(Copd, Suppress, 0.9)], &routing(&[Copd]), &alert_at(DeviceStatus::Ok, 5), &mut h, &cfg);
        assert!(matches!(err, Err(MetaError::OutOfOrder { .. })));
    }

    #[test]
    fn config_validation() {
        assert!(MetaConfig::default().validate().is_ok());
        assert!(MetaConfig { resolution_margin: 1.0, ..Default::default() }.validate().is_err());
        assert!(MetaConfig { cooldown_window: 0, ..Default::default() }.validate().is_err());
        let mut bad = MetaConfig::default();
        bad.domain_weights.insert(Copd, 0.0);
        assert!(bad.validate().is_err());
    }

    fn claims_strategy() -> impl Strategy<Value = Vec<AgentClaim>> {
        proptest::sample::subsequence(AgentDomain::ALL.to_vec(), 1..=6).prop_flat_map(|ds| {
            let n = ds.len();
            (
                Just(ds),
                proptest::collection::vec(proptest::sample::select(Recommendation::ALL), n),
                proptest::collection::vec(0.0f64..=1.0, n),
            )
                .prop_map(|(ds, rs, cs)| ds.into_iter().zip(rs).zip(cs).map(|((d, r), c)| claim(d, r, c)).collect())
        })
    }

    proptest! {
        #[test]
        fn debounce_replay_never_flips(claims in claims_strategy(), replay in claims_strategy(), gap in 1i64..=10) {
            let cfg = MetaConfig::default();
            let mut h = DecisionHistory::new();
            let first = resolve(&claims, &routing(&[]), &alert_at(DeviceStatus::Ok, 0), &mut h, &cfg).unwrap();
            let again = resolve(&replay, &routing(&[]), &alert_at(DeviceStatus::Ok, gap), &mut h, &cfg).unwrap();
            prop_assert_eq!(first.verdict, again.verdict);
        }
    }
}
