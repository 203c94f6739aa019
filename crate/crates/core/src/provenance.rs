//! Record assembly and the specialist-input projection.
//!
//! [`assemble`] joins the four input sources for one epoch and tags every
//! field by the source it came from. [`project_for_specialists`] is the only
//! way downstream layers see a record; it drops every `Inferred` field.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{
    AccelLevel, DeviceStatus, Epoch, PatientContext, Position, ProvenanceTag, SelfReportedActivity, TaggedContext,
    TaggedValue, Timestamp, VeritasRecord,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConversationEntry {
    pub at: Timestamp,
    pub statement: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PatientReport {
    pub at: Timestamp,
    pub activity: SelfReportedActivity,
}

/// The four inputs for one patient.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SourceBundle {
    pub ehr: PatientContext,
    #[serde(default)]
    pub conversation_log: Vec<ConversationEntry>,
    pub vitals_stream: Vec<Epoch>,
    #[serde(default)]
    pub patient_reported: Vec<PatientReport>,
}

impl SourceBundle {
    /// Builds a bundle from dataset rows. Self-reported activity carried on
    /// an epoch row becomes a patient report stamped at that epoch.
    pub fn from_epochs(ehr: PatientContext, epochs: Vec<Epoch>) -> Self {
        let patient_reported = epochs
            .iter()
            .filter_map(|e| {
                e.self_reported_activity.map(|activity| PatientReport {
                    at: e.timestamp,
                    activity,
                })
            })
            .collect();
        Self {
            ehr,
            conversation_log: Vec::new(),
            vitals_stream: epochs,
            patient_reported,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AssemblyError {
    #[error("no epoch at {0}")]
    NoEpochAtTimestamp(Timestamp),
    #[error("patient id mismatch: ehr has {ehr}, vitals stream has {vitals}")]
    PatientIdMismatch { ehr: u32, vitals: u32 },
}

fn source(kind: &str, patient_id: u32) -> String {
    format!("{kind}:{patient_id}")
}

/// Assembles the record for the epoch at `at`.
///
/// Patient reports and conversation statements are joined by recency: the
/// latest entry stamped at or before `at` is attached.
pub fn assemble(bundle: &SourceBundle, at: Timestamp) -> Result<VeritasRecord, AssemblyError> {
    let pid = bundle.ehr.patient_id;
    if let Some(e) = bundle.vitals_stream.iter().find(|e| e.patient_id != pid) {
        return Err(AssemblyError::PatientIdMismatch {
            ehr: pid,
            vitals: e.patient_id,
        });
    }
    let epoch = bundle
        .vitals_stream
        .iter()
        .find(|e| e.timestamp == at)
        .ok_or(AssemblyError::NoEpochAtTimestamp(at))?;

    let vitals = source("vitals", pid);
    let device = |v| TaggedValue::new(v, ProvenanceTag::DeviceVerified, vitals.clone(), at);
    let ehr_src = source("ehr", pid);
    let ehr = |v| TaggedValue::new(v, ProvenanceTag::EhrDerived, ehr_src.clone(), at);

    let report = bundle
        .patient_reported
        .iter()
        .filter(|r| r.at <= at)
        .max_by_key(|r| r.at)
        .map(|r| TaggedValue::new(r.activity, ProvenanceTag::PatientReported, source("patient_report", pid), r.at));

    let latest_statement = bundle.conversation_log.iter().filter(|c| c.at <= at).map(|c| c.at).max();
    let conversation_flags = match latest_statement {
        Some(t) => bundle
            .conversation_log
            .iter()
            .filter(|c| c.at == t)
            .map(|c| TaggedValue::new(c.statement.clone(), ProvenanceTag::PatientReported, source("conversation", pid), c.at))
            .collect(),
        None => Vec::new(),
    };

    Ok(VeritasRecord {
        patient_id: pid,
        timestamp: at,
        spo2: device(epoch.spo2),
        hr: device(epoch.hr),
        accel_level: TaggedValue::new(epoch.accel_level, ProvenanceTag::DeviceVerified, vitals.clone(), at),
        device_status: TaggedValue::new(epoch.device_status, ProvenanceTag::DeviceVerified, vitals.clone(), at),
        probe_cover_present: TaggedValue::new(epoch.probe_cover_present, ProvenanceTag::DeviceVerified, vitals.clone(), at),
        position: TaggedValue::new(epoch.position, ProvenanceTag::DeviceVerified, vitals.clone(), at),
        self_reported_activity: report,
        ambient_condition: epoch
            .ambient_condition
            .clone()
            .map(|a| TaggedValue::new(a, ProvenanceTag::DeviceVerified, vitals.clone(), at)),
        context: TaggedContext {
            copd_documented: ehr(bundle.ehr.copd_documented),
            baseline_spo2: bundle.ehr.baseline_spo2.map(|b| TaggedValue::new(b, ProvenanceTag::EhrDerived, ehr_src.clone(), at)),
            baseline_hr: bundle.ehr.baseline_hr.map(|b| TaggedValue::new(b, ProvenanceTag::EhrDerived, ehr_src.clone(), at)),
            rate_limiting_medication: ehr(bundle.ehr.rate_limiting_medication),
        },
        conversation_flags,
    })
}

/// The record as specialists see it. A field whose provenance is `Inferred`
/// is not present here at all.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpecialistView {
    pub patient_id: u32,
    pub timestamp: Timestamp,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spo2: Option<TaggedValue<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hr: Option<TaggedValue<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub accel_level: Option<TaggedValue<AccelLevel>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub device_status: Option<TaggedValue<DeviceStatus>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub probe_cover_present: Option<TaggedValue<bool>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub position: Option<TaggedValue<Position>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub self_reported_activity: Option<TaggedValue<SelfReportedActivity>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ambient_condition: Option<TaggedValue<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub copd_documented: Option<TaggedValue<bool>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub baseline_spo2: Option<TaggedValue<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub baseline_hr: Option<TaggedValue<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rate_limiting_medication: Option<TaggedValue<bool>>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub conversation_flags: Vec<TaggedValue<String>>,
}

fn admit<T>(v: TaggedValue<T>) -> Option<TaggedValue<T>> {
    (!v.is_inferred()).then_some(v)
}

pub fn project_for_specialists(r: &VeritasRecord) -> SpecialistView {
    let r = r.clone();
    SpecialistView {
        patient_id: r.patient_id,
        timestamp: r.timestamp,
        spo2: admit(r.spo2),
        hr: admit(r.hr),
        accel_level: admit(r.accel_level),
        device_status: admit(r.device_status),
        probe_cover_present: admit(r.probe_cover_present),
        position: admit(r.position),
        self_reported_activity: r.self_reported_activity.and_then(admit),
        ambient_condition: r.ambient_condition.and_then(admit),
        copd_documented: admit(r.context.copd_documented),
        baseline_spo2: r.context.baseline_spo2.and_then(admit),
        baseline_hr: r.context.baseline_hr.and_then(admit),
        rate_limiting_medication: admit(r.context.rate_limiting_medication),
        conversation_flags: r.conversation_flags.into_iter().filter_map(admit).collect(),
    }
}

impl SpecialistView {
    pub fn spo2(&self) -> Option<f64> {
        self.spo2.as_ref().map(TaggedValue::get)
    }

    pub fn hr(&self) -> Option<f64> {
        self.hr.as_ref().map(TaggedValue::get)
    }

    pub fn accel_level(&self) -> Option<AccelLevel> {
        self.accel_level.as_ref().map(TaggedValue::get)
    }

    pub fn device_status(&self) -> Option<DeviceStatus> {
        self.device_status.as_ref().map(TaggedValue::get)
    }

    pub fn position(&self) -> Option<Position> {
        self.position.as_ref().map(TaggedValue::get)
    }

    pub fn self_reported_activity(&self) -> Option<SelfReportedActivity> {
        self.self_reported_activity.as_ref().map(TaggedValue::get)
    }

    pub fn copd_documented(&self) -> bool {
        self.copd_documented.as_ref().is_some_and(TaggedValue::get)
    }

    pub fn baseline_spo2(&self) -> Option<f64> {
        self.baseline_spo2.as_ref().map(TaggedValue::get)
    }

    pub fn baseline_hr(&self) -> Option<f64> {
        self.baseline_hr.as_ref().map(TaggedValue::get)
    }

    pub fn rate_limiting_medication(&self) -> bool {
        self.rate_limiting_medication.as_ref().is_some_and(TaggedValue::get)
    }

    /// Accelerometer reports motion. An absent reading is not motion.
    pub fn in_motion(&self) -> bool {
        self.accel_level().is_some_and(|a| a != AccelLevel::Still)
    }

    /// `(field, provenance)` for every field present in the view.
    pub fn provenance_scan(&self) -> Vec<(&'static str, ProvenanceTag)> {
        let mut out = Vec::new();
        macro_rules! scan {
            ($($f:ident),+) => {
                $(if let Some(v) = &self.$f { out.push((stringify!($f), v.provenance())); })+
            };
        }
        scan!(
            spo2,
            hr,
            accel_level,
            device_status,
            probe_cover_present,
            position,
            self_reported_activity,
            ambient_condition,
            copd_documented,
            baseline_spo2,
            baseline_hr,
            rate_limiting_medication
        );
        out.extend(self.conversation_flags.iter().map(|c| ("conversation_flags", c.provenance())));
        out
    }
}
