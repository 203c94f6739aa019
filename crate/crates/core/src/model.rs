//! Shared domain types for every pipeline layer.
//!
//! All types serialize as JSON with snake_case field names, and enumerations
//! as lowercase snake_case strings. Unknown enumeration strings are rejected at
//! parse time.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use chrono::{DateTime, Datelike, TimeZone, Timelike, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub type Timestamp = DateTime<Utc>;

/// First synthetic patient identifier.
pub const PATIENT_ID_MIN: u32 = 3_847_291;
/// Last synthetic patient identifier (inclusive).
pub const PATIENT_ID_MAX: u32 = 3_847_388;

pub const SPO2_MIN: f64 = 70.0;
pub const SPO2_MAX: f64 = 100.0;
pub const HR_MIN: f64 = 25.0;
pub const HR_MAX: f64 = 220.0;

/// Returned when a string does not name a variant of a closed enumeration.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown {kind} variant `{value}`")]
pub struct UnknownVariant {
    pub kind: &'static str,
    pub value: String,
}

macro_rules! closed_enum {
    (
        $(#[$meta:meta])*
        $name:ident, $kind:literal { $($variant:ident => $text:literal),+ $(,)? }
    ) => {
        $(#[$meta])*
        #[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
        #[serde(rename_all = "snake_case")]
        pub enum $name {
            $($variant),+
        }

        impl $name {
            pub const ALL: &'static [$name] = &[$($name::$variant),+];

            pub fn as_str(self) -> &'static str {
                match self {
                    $($name::$variant => $text),+
                }
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.as_str())
            }
        }

        impl FromStr for $name {
            type Err = UnknownVariant;

            fn from_str(s: &str) -> Result<Self, Self::Err> {
                match s {
                    $($text => Ok($name::$variant),)+
                    other => Err(UnknownVariant { kind: $kind, value: other.to_string() }),
                }
            }
        }
    };
}

pub(crate) use closed_enum;

closed_enum! {
    /// Trust origin of a datum.
    ProvenanceTag, "provenance tag" {
        DeviceVerified => "device_verified",
        PatientReported => "patient_reported",
        EhrDerived => "ehr_derived",
        Inferred => "inferred",
    }
}

closed_enum! {
    DeviceStatus, "device status" {
        Ok => "ok",
        MotionArtefact => "motion_artefact",
        ProbeCover => "probe_cover",
        SystemFlag => "system_flag",
        ThresholdMarginal => "threshold_marginal",
        DuplicateAlert => "duplicate_alert",
    }
}

closed_enum! {
    AccelLevel, "accelerometer level" {
        Still => "still",
        Light => "light",
        Vigorous => "vigorous",
    }
}

closed_enum! {
    Position, "position" {
        Upright => "upright",
        Supine => "supine",
        Prone => "prone",
        Lateral => "lateral",
    }
}

closed_enum! {
    SelfReportedActivity, "self-reported activity" {
        Resting => "resting",
        Walking => "walking",
        Exercising => "exercising",
    }
}

closed_enum! {
    AlertType, "alert type" {
        LowSpo2 => "low_spo2",
        HighHr => "high_hr",
        LowHr => "low_hr",
        SignalQuality => "signal_quality",
    }
}

closed_enum! {
    /// The six specialist domains. Declaration order is the canonical
    /// claim ordering.
    AgentDomain, "agent domain" {
        ProbeIntegrity => "probe_integrity",
        ActivityIntegrity => "activity_integrity",
        Tachycardia => "tachycardia",
        Bradycardia => "bradycardia",
        Copd => "copd",
        Nocturnal => "nocturnal",
    }
}

closed_enum! {
    Recommendation, "recommendation" {
        Suppress => "suppress",
        Escalate => "escalate",
        Indeterminate => "indeterminate",
    }
}

closed_enum! {
    RiskLevel, "risk level" {
        Low => "low",
        Medium => "medium",
        High => "high",
    }
}

closed_enum! {
    Verdict, "verdict" {
        Suppress => "suppress",
        Escalate => "escalate",
    }
}

closed_enum! {
    ResolutionPath, "resolution path" {
        SingleDomain => "single_domain",
        WeightedAggregation => "weighted_aggregation",
        AmbiguityDefault => "ambiguity_default",
        Debounced => "debounced",
    }
}

impl AlertType {
    /// Physiological (as opposed to signal-quality) alert types.
    pub fn is_physiological(self) -> bool {
        !matches!(self, AlertType::SignalQuality)
    }
}

impl SelfReportedActivity {
    pub fn implies_motion(self) -> bool {
        matches!(self, SelfReportedActivity::Walking | SelfReportedActivity::Exercising)
    }
}

/// Start of the nocturnal window, as an hour of day.
pub const NOCTURNAL_START_HOUR: u32 = 22;
/// End of the nocturnal window (exclusive), as an hour of day.
pub const NOCTURNAL_END_HOUR: u32 = 6;

/// `true` when the clock time of `ts` falls in `[22:00, 06:00)`.
pub fn is_nocturnal(ts: &Timestamp) -> bool {
    let h = ts.hour();
    !(NOCTURNAL_END_HOUR..NOCTURNAL_START_HOUR).contains(&h)
}

/// A value annotated with where it came from. There is no way to build one
/// without a provenance tag, and the tag cannot be changed afterwards.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaggedValue<T> {
    value: T,
    provenance: ProvenanceTag,
    source_id: String,
    observed_at: Timestamp,
}

impl<T> TaggedValue<T> {
    pub fn new(value: T, provenance: ProvenanceTag, source_id: impl Into<String>, observed_at: Timestamp) -> Self {
        Self {
            value,
            provenance,
            source_id: source_id.into(),
            observed_at,
        }
    }

    pub fn value(&self) -> &T {
        &self.value
    }

    pub fn provenance(&self) -> ProvenanceTag {
        self.provenance
    }

    pub fn source_id(&self) -> &str {
        &self.source_id
    }

    pub fn observed_at(&self) -> Timestamp {
        self.observed_at
    }

    pub fn is_inferred(&self) -> bool {
        self.provenance == ProvenanceTag::Inferred
    }

    /// Maps the payload, keeping provenance and origin.
    pub fn map<U>(self, f: impl FnOnce(T) -> U) -> TaggedValue<U> {
        TaggedValue {
            value: f(self.value),
            provenance: self.provenance,
            source_id: self.source_id,
            observed_at: self.observed_at,
        }
    }
}

impl<T: Copy> TaggedValue<T> {
    pub fn get(&self) -> T {
        self.value
    }
}

/// One-minute summary row for one patient.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Epoch {
    pub patient_id: u32,
    pub timestamp: Timestamp,
    pub spo2: f64,
    pub hr: f64,
    pub accel_level: AccelLevel,
    pub device_status: DeviceStatus,
    pub probe_cover_present: bool,
    pub position: Position,
    #[serde(default)]
    pub self_reported_activity: Option<SelfReportedActivity>,
    #[serde(default)]
    pub ambient_condition: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PatientContext {
    pub patient_id: u32,
    pub copd_documented: bool,
    #[serde(default)]
    pub baseline_spo2: Option<f64>,
    #[serde(default)]
    pub baseline_hr: Option<f64>,
    pub rate_limiting_medication: bool,
}

impl PatientContext {
    pub fn validate(&self) -> Result<(), Vec<Violation>> {
        let mut out = Vec::new();
        if self.copd_documented && self.baseline_spo2.is_none() {
            out.push(Violation::new("baseline_spo2", "required when copd_documented is true"));
        }
        if let Some(b) = self.baseline_spo2 {
            if !(SPO2_MIN..=SPO2_MAX).contains(&b) {
                out.push(Violation::new("baseline_spo2", "out of [70,100]"));
            }
        }
        if let Some(b) = self.baseline_hr {
            if !(HR_MIN..=HR_MAX).contains(&b) {
                out.push(Violation::new("baseline_hr", "out of [25,220]"));
            }
        }
        if out.is_empty() {
            Ok(())
        } else {
            Err(out)
        }
    }
}

/// A single failed invariant, naming the field and the bound.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub field: String,
    pub message: String,
}

impl Violation {
    pub fn new(field: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            field: field.into(),
            message: message.into(),
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {}", self.field, self.message)
    }
}

/// Checks only the physiological bounds and minute resolution, which apply
/// to every epoch regardless of origin.
pub fn validate_readings(e: &Epoch) -> Vec<Violation> {
    let mut out = Vec::new();
    if !(SPO2_MIN..=SPO2_MAX).contains(&e.spo2) {
        out.push(Violation::new("spo2", "out of [70,100]"));
    }
    if !(HR_MIN..=HR_MAX).contains(&e.hr) {
        out.push(Violation::new("hr", "out of [25,220]"));
    }
    if e.timestamp.second() != 0 || e.timestamp.nanosecond() != 0 {
        out.push(Violation::new("timestamp", "not at minute resolution"));
    }
    out
}

/// Full epoch validation, including the synthetic patient-id range and the
/// June to August 2022 monitoring window.
pub fn validate_epoch(e: &Epoch) -> Result<(), Vec<Violation>> {
    let mut out = validate_readings(e);
    if !(PATIENT_ID_MIN..=PATIENT_ID_MAX).contains(&e.patient_id) {
        out.push(Violation::new("patient_id", "out of [3847291,3847388]"));
    }
    if !in_monitoring_window(&e.timestamp) {
        out.push(Violation::new("timestamp", "outside June-August 2022"));
    }
    if out.is_empty() {
        Ok(())
    } else {
        Err(out)
    }
}

pub fn monitoring_window() -> (Timestamp, Timestamp) {
    (
        Utc.with_ymd_and_hms(2022, 6, 1, 0, 0, 0).unwrap(),
        Utc.with_ymd_and_hms(2022, 9, 1, 0, 0, 0).unwrap(),
    )
}

pub fn in_monitoring_window(ts: &Timestamp) -> bool {
    ts.year() == 2022 && (6..=8).contains(&ts.month())
}

/// Every field the downstream layers may consult, each carrying its origin.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VeritasRecord {
    pub patient_id: u32,
    pub timestamp: Timestamp,
    pub spo2: TaggedValue<f64>,
    pub hr: TaggedValue<f64>,
    pub accel_level: TaggedValue<AccelLevel>,
    pub device_status: TaggedValue<DeviceStatus>,
    pub probe_cover_present: TaggedValue<bool>,
    pub position: TaggedValue<Position>,
    pub self_reported_activity: Option<TaggedValue<SelfReportedActivity>>,
    pub ambient_condition: Option<TaggedValue<String>>,
    pub context: TaggedContext,
    pub conversation_flags: Vec<TaggedValue<String>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaggedContext {
    pub copd_documented: TaggedValue<bool>,
    pub baseline_spo2: Option<TaggedValue<f64>>,
    pub baseline_hr: Option<TaggedValue<f64>>,
    pub rate_limiting_medication: TaggedValue<bool>,
}

/// Payload attached to an alert as the value that triggered it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Reading {
    Number(f64),
    Status(DeviceStatus),
}

/// What the sentinel hands to routing: a set of fired alert types, the
/// values that fired them, and the projected record they were read from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateAlert {
    pub patient_id: u32,
    pub alert_types: BTreeSet<AlertType>,
    pub triggering_values: BTreeMap<AlertType, TaggedValue<Reading>>,
    pub view: crate::provenance::SpecialistView,
    pub raised_at: Timestamp,
}

impl CandidateAlert {
    pub fn has(&self, t: AlertType) -> bool {
        self.alert_types.contains(&t)
    }

    pub fn any_physiological(&self) -> bool {
        self.alert_types.iter().any(|t| t.is_physiological())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentClaim {
    pub domain: AgentDomain,
    pub recommendation: Recommendation,
    pub confidence: f64,
    pub risk_level: RiskLevel,
    pub rationale_codes: Vec<String>,
}

impl AgentClaim {
    pub fn new(domain: AgentDomain, recommendation: Recommendation, confidence: f64, rationale: &str) -> Self {
        let risk_level = match recommendation {
            Recommendation::Suppress => RiskLevel::Low,
            Recommendation::Indeterminate => RiskLevel::Medium,
            Recommendation::Escalate => RiskLevel::High,
        };
        Self {
            domain,
            recommendation,
            confidence: confidence.clamp(0.0, 1.0),
            risk_level,
            rationale_codes: vec![rationale.to_string()],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemDecision {
    pub verdict: Verdict,
    pub contributing_claims: Vec<AgentClaim>,
    pub resolution_path: ResolutionPath,
    pub decided_at: Timestamp,
}
