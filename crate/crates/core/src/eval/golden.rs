//! Reference metrics for the shipped catalogue at the default configuration.

use crate::model::DeviceStatus;
use crate::synthgen::DomainClass;

use super::EvaluationReport;

pub const TRUE_SUPPRESSIONS: usize = 82;
pub const FALSE_ESCALATIONS: usize = 16;
pub const INDETERMINATE: usize = 0;

/// (class, n, TS, FE)
pub const DOMAIN_ROWS: [(DomainClass, usize, usize, usize); 9] = [
    (DomainClass::ProbeIntegrity, 23, 23, 0),
    (DomainClass::ActivityIntegrity, 8, 8, 0),
    (DomainClass::Copd, 13, 13, 0),
    (DomainClass::Bradycardia, 2, 2, 0),
    (DomainClass::Nocturnal, 3, 3, 0),
    (DomainClass::Tachycardia, 8, 7, 1),
    (DomainClass::MetaConflict, 30, 21, 9),
    (DomainClass::ProbeActivityConflict, 8, 5, 3),
    (DomainClass::ProbeConditionConflict, 3, 0, 3),
];

pub const FAILURE_MODES: [(DeviceStatus, usize); 6] = [
    (DeviceStatus::SystemFlag, 7),
    (DeviceStatus::Ok, 4),
    (DeviceStatus::MotionArtefact, 2),
    (DeviceStatus::ProbeCover, 1),
    (DeviceStatus::ThresholdMarginal, 1),
    (DeviceStatus::DuplicateAlert, 1),
];

pub const SUMMARY_LINE: &str = "TSR 83.7% FER 16.3% INDR 0.0%";

/// Every difference between `report` and the reference figures. Empty means
/// the report matches exactly.
pub fn golden_check(report: &EvaluationReport) -> Vec<String> {
    let mut out = Vec::new();
    let o = &report.overall;
    for (name, got, want) in [
        ("true suppressions", o.ts_count, TRUE_SUPPRESSIONS),
        ("false escalations", o.fe_count, FALSE_ESCALATIONS),
        ("indeterminate", o.ind_count, INDETERMINATE),
    ] {
        if got != want {
            out.push(format!("{name}: expected {want}, got {got}"));
        }
    }
    if report.summary_line() != SUMMARY_LINE {
        out.push(format!("summary: expected {SUMMARY_LINE:?}, got {:?}", report.summary_line()));
    }
    for (class, n, ts, fe) in DOMAIN_ROWS {
        let got = report.per_domain.get(&class).map(|d| (d.n, d.ts, d.fe)).unwrap_or_default();
        if got != (n, ts, fe) {
            out.push(format!("{class}: expected n/TS/FE {n}/{ts}/{fe}, got {}/{}/{}", got.0, got.1, got.2));
        }
    }
    if report.per_domain.len() != DOMAIN_ROWS.len() {
        out.push(format!("expected {} domain rows, got {}", DOMAIN_ROWS.len(), report.per_domain.len()));
    }
    for (status, want) in FAILURE_MODES {
        let got = report.failure_modes.get(&status).copied().unwrap_or(0);
        if got != want {
            out.push(format!("failure mode {status}: expected {want}, got {got}"));
        }
    }
    let extra: Vec<_> = report
        .failure_modes
        .keys()
        .filter(|s| !FAILURE_MODES.iter().any(|(f, _)| f == *s))
        .collect();
    if !extra.is_empty() {
        out.push(format!("unexpected failure modes {extra:?}"));
    }
    out
}
