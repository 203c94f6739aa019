//! False-positive scenario catalogue and its validation rules.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{
    closed_enum, AccelLevel, DeviceStatus, PatientContext, Position, SelfReportedActivity, UnknownVariant, HR_MAX,
    HR_MIN, SPO2_MAX, SPO2_MIN,
};

closed_enum! {
    /// Stratification class of a taxonomy case.
    DomainClass, "domain class" {
        ProbeIntegrity => "probe_integrity",
        ActivityIntegrity => "activity_integrity",
        Copd => "copd",
        Bradycardia => "bradycardia",
        Nocturnal => "nocturnal",
        Tachycardia => "tachycardia",
        MetaConflict => "meta_conflict",
        ProbeActivityConflict => "probe_activity_conflict",
        ProbeConditionConflict => "probe_condition_conflict",
    }
}

impl DomainClass {
    pub fn label(self) -> &'static str {
        match self {
            DomainClass::ProbeIntegrity => "ProbeIntegrity",
            DomainClass::ActivityIntegrity => "ActivityIntegrity",
            DomainClass::Copd => "COPD",
            DomainClass::Bradycardia => "Bradycardia",
            DomainClass::Nocturnal => "Nocturnal",
            DomainClass::Tachycardia => "Tachycardia",
            DomainClass::MetaConflict => "MetaSentinel conflict resolution",
            DomainClass::ProbeActivityConflict => "ProbeIntegrity + Activity conflict",
            DomainClass::ProbeConditionConflict => "ProbeIntegrity + condition conflict",
        }
    }

    /// Classes whose cases are owned by a single specialist.
    pub fn is_single_specialist(self) -> bool {
        !matches!(
            self,
            DomainClass::MetaConflict | DomainClass::ProbeActivityConflict | DomainClass::ProbeConditionConflict
        )
    }
}

/// Number of cases, epochs and per-class cases the catalogue must contain.
pub const REQUIRED_CASES: usize = 98;
pub const REQUIRED_EPOCHS: u32 = 530;
pub const REQUIRED_CLASS_COUNTS: [(DomainClass, usize); 9] = [
    (DomainClass::ProbeIntegrity, 23),
    (DomainClass::ActivityIntegrity, 8),
    (DomainClass::Copd, 13),
    (DomainClass::Bradycardia, 2),
    (DomainClass::Nocturnal, 3),
    (DomainClass::Tachycardia, 8),
    (DomainClass::MetaConflict, 30),
    (DomainClass::ProbeActivityConflict, 8),
    (DomainClass::ProbeConditionConflict, 3),
];

closed_enum! {
    ContinuousField, "continuous field" {
        Spo2 => "spo2",
        Hr => "hr",
    }
}

impl ContinuousField {
    pub fn physiological_bounds(self) -> (f64, f64) {
        match self {
            ContinuousField::Spo2 => (SPO2_MIN, SPO2_MAX),
            ContinuousField::Hr => (HR_MIN, HR_MAX),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GaussianSpec {
    pub mu: f64,
    pub sigma: f64,
    pub lower: f64,
    pub upper: f64,
}

/// A categorical parameter: one fixed value, or a uniform pick from a set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Choice<T> {
    Fixed(T),
    Uniform(Vec<T>),
}

impl<T: Clone> Choice<T> {
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> T {
        match self {
            Choice::Fixed(v) => v.clone(),
            Choice::Uniform(vs) => vs[rng.random_range(0..vs.len())].clone(),
        }
    }

    fn is_valid(&self) -> bool {
        !matches!(self, Choice::Uniform(vs) if vs.is_empty())
    }
}

impl<T> Default for Choice<Option<T>> {
    fn default() -> Self {
        Choice::Fixed(None)
    }
}

fn fixed_false() -> Choice<bool> {
    Choice::Fixed(false)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CategoricalParams {
    pub accel_level: Choice<AccelLevel>,
    pub device_status: Choice<DeviceStatus>,
    #[serde(default = "fixed_false")]
    pub probe_cover_present: Choice<bool>,
    pub position: Choice<Position>,
    #[serde(default)]
    pub self_reported_activity: Choice<Option<SelfReportedActivity>>,
    #[serde(default)]
    pub ambient_condition: Choice<Option<String>>,
}

/// Patient context without the patient id, which is assigned at generation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ContextTemplate {
    pub copd_documented: bool,
    #[serde(default)]
    pub baseline_spo2: Option<f64>,
    #[serde(default)]
    pub baseline_hr: Option<f64>,
    pub rate_limiting_medication: bool,
}

impl ContextTemplate {
    pub fn instantiate(&self, patient_id: u32) -> PatientContext {
        PatientContext {
            patient_id,
            copd_documented: self.copd_documented,
            baseline_spo2: self.baseline_spo2,
            baseline_hr: self.baseline_hr,
            rate_limiting_medication: self.rate_limiting_medication,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TaxonomyEntry {
    pub case_id: String,
    pub domain_class: DomainClass,
    pub epoch_count: u32,
    pub continuous_params: BTreeMap<ContinuousField, GaussianSpec>,
    pub categorical_params: CategoricalParams,
    pub context: ContextTemplate,
    pub nocturnal: bool,
    #[serde(default)]
    pub expected_outcome_note: String,
}

#[derive(Debug, Error)]
pub enum TaxonomyError {
    #[error("case {case_id}: {reason}")]
    InvalidEntry { case_id: String, reason: String },
    #[error("taxonomy invariant violated: {0}")]
    InvariantViolation(String),
    #[error("reading taxonomy {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("parsing taxonomy: {0}")]
    Parse(#[from] serde_json::Error),
}

impl TaxonomyEntry {
    pub fn spec(&self, f: ContinuousField) -> Option<&GaussianSpec> {
        self.continuous_params.get(&f)
    }

    pub fn validate(&self) -> Result<(), TaxonomyError> {
        let bad = |reason: String| TaxonomyError::InvalidEntry {
            case_id: self.case_id.clone(),
            reason,
        };
        if self.case_id.trim().is_empty() {
            return Err(bad("case_id is empty".into()));
        }
        if self.epoch_count == 0 {
            return Err(bad("epoch_count must be positive".into()));
        }
        for f in ContinuousField::ALL {
            let Some(g) = self.continuous_params.get(f) else {
                return Err(bad(format!("missing continuous parameter {f}")));
            };
            let (lo, hi) = f.physiological_bounds();
            if g.sigma.is_nan() || g.sigma <= 0.0 {
                return Err(bad(format!("{f}: sigma must be positive")));
            }
            if !(g.lower < g.upper && g.lower <= g.mu && g.mu <= g.upper) {
                return Err(bad(format!("{f}: need lower <= mu <= upper with lower < upper")));
            }
            if g.lower < lo || g.upper > hi {
                return Err(bad(format!("{f}: bounds exceed [{lo}, {hi}]")));
            }
        }
        let c = &self.categorical_params;
        let all_valid = c.accel_level.is_valid()
            && c.device_status.is_valid()
            && c.probe_cover_present.is_valid()
            && c.position.is_valid()
            && c.self_reported_activity.is_valid()
            && c.ambient_condition.is_valid();
        if !all_valid {
            return Err(bad("uniform choice sets must be nonempty".into()));
        }
        if let Err(v) = self.context.instantiate(0).validate() {
            return Err(bad(format!("context: {}", v[0])));
        }
        // nocturnal cases are scheduled inside 00:00-06:00
        if self.nocturnal && self.epoch_count > 6 * 60 {
            return Err(bad("nocturnal case longer than the nocturnal window".into()));
        }
        Ok(())
    }
}

/// The full catalogue, in case order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Taxonomy {
    pub entries: Vec<TaxonomyEntry>,
}

const SHIPPED: &str = include_str!("../../data/taxonomy.json");

impl Taxonomy {
    /// The catalogue bundled with this crate.
    pub fn shipped() -> Self {
        serde_json::from_str(SHIPPED).expect("bundled taxonomy parses")
    }

    pub fn from_json(text: &str) -> Result<Self, TaxonomyError> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn load(path: &Path) -> Result<Self, TaxonomyError> {
        let text = fs::read_to_string(path).map_err(|source| TaxonomyError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_json(&text)
    }

    pub fn total_epochs(&self) -> u32 {
        self.entries.iter().map(|e| e.epoch_count).sum()
    }

    pub fn class_counts(&self) -> BTreeMap<DomainClass, usize> {
        let mut out = BTreeMap::new();
        for e in &self.entries {
            *out.entry(e.domain_class).or_insert(0) += 1;
        }
        out
    }

    pub fn get(&self, case_id: &str) -> Option<&TaxonomyEntry> {
        self.entries.iter().find(|e| e.case_id == case_id)
    }

    /// Entry-level checks plus the catalogue-level shape: 98 uniquely named
    /// cases, 530 epochs, and the fixed per-class case counts.
    pub fn validate(&self) -> Result<(), TaxonomyError> {
        for e in &self.entries {
            e.validate()?;
        }
        let mut seen = BTreeSet::new();
        if let Some(dup) = self.entries.iter().find(|e| !seen.insert(e.case_id.as_str())) {
            return Err(TaxonomyError::InvariantViolation(format!("duplicate case_id {}", dup.case_id)));
        }
        if self.entries.len() != REQUIRED_CASES {
            return Err(TaxonomyError::InvariantViolation(format!(
                "expected {REQUIRED_CASES} entries, found {}",
                self.entries.len()
            )));
        }
        if self.total_epochs() != REQUIRED_EPOCHS {
            return Err(TaxonomyError::InvariantViolation(format!(
                "expected {REQUIRED_EPOCHS} epochs in total, found {}",
                self.total_epochs()
            )));
        }
        let counts = self.class_counts();
        for (class, n) in REQUIRED_CLASS_COUNTS {
            let got = counts.get(&class).copied().unwrap_or(0);
            if got != n {
                return Err(TaxonomyError::InvariantViolation(format!("expected {n} {class} cases, found {got}")));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shipped_catalogue_is_valid() {
        let t = Taxonomy::shipped();
        t.validate().unwrap();
        assert_eq!(t.entries.len(), 98);
        assert_eq!(t.total_epochs(), 530);
        let counts = t.class_counts();
        for (class, n) in REQUIRED_CLASS_COUNTS {
            assert_eq!(counts[&class], n, "{class}");
        }
    }

    #[test]
    fn shipped_catalogue_encodes_failure_scenarios() {
        let t = Taxonomy::shipped();
        let fixed = |e: &TaxonomyEntry| match &e.categorical_params.device_status {
            Choice::Fixed(s) => Some(*s),
            Choice::Uniform(_) => None,
        };
        let count = |class: &[DomainClass], status| {
            t.entries.iter().filter(|e| class.contains(&e.domain_class) && fixed(e) == Some(status)).count()
        };
        use DomainClass::*;
        let escalating = |e: &&TaxonomyEntry| e.expected_outcome_note.starts_with("false_escalation");
        let fe: Vec<_> = t.entries.iter().filter(escalating).collect();
        assert_eq!(fe.len(), 16);
        let fe_with = |status| fe.iter().filter(|e| fixed(e) == Some(status)).count();
        assert_eq!(fe_with(DeviceStatus::SystemFlag), 7);
        assert_eq!(fe_with(DeviceStatus::Ok), 4);
        assert_eq!(fe_with(DeviceStatus::MotionArtefact), 2);
        assert_eq!(fe_with(DeviceStatus::ProbeCover), 1);
        assert_eq!(fe_with(DeviceStatus::ThresholdMarginal), 1);
        assert_eq!(fe_with(DeviceStatus::DuplicateAlert), 1);
        assert!(fe.iter().filter(|e| fixed(e) == Some(DeviceStatus::SystemFlag)).all(|e| e.domain_class == MetaConflict));
        // the borderline SpO2 conflicts sit inside 88-97%
        for e in fe.iter().filter(|e| fixed(e) == Some(DeviceStatus::Ok) && e.domain_class != Tachycardia) {
            let s = e.spec(ContinuousField::Spo2).unwrap();
            assert!(s.lower >= 88.0 && s.upper <= 97.0, "{}", e.case_id);
        }
        let marginal: Vec<_> = fe.iter().filter(|e| fixed(e) == Some(DeviceStatus::ThresholdMarginal)).collect();
        assert_eq!(marginal[0].spec(ContinuousField::Spo2).unwrap().mu, 93.5);
        assert_eq!(marginal[0].spec(ContinuousField::Hr).unwrap().mu, 101.8);
        assert!(count(&[ProbeActivityConflict], DeviceStatus::MotionArtefact) >= 2);
    }

    fn entry() -> TaxonomyEntry {
        Taxonomy::shipped().entries[0].clone()
    }

    #[test]
    fn entry_validation_errors() {
        let mut e = entry();
        e.epoch_count = 0;
        assert!(e.validate().is_err());

        let mut e = entry();
        e.continuous_params.get_mut(&ContinuousField::Spo2).unwrap().sigma = 0.0;
        assert!(e.validate().is_err());

        let mut e = entry();
        let g = e.continuous_params.get_mut(&ContinuousField::Hr).unwrap();
        g.mu = g.upper + 1.0;
        assert!(e.validate().is_err());

        let mut e = entry();
        e.continuous_params.remove(&ContinuousField::Hr);
        assert!(e.validate().is_err());

        let mut e = entry();
        e.categorical_params.position = Choice::Uniform(vec![]);
        assert!(e.validate().is_err());

        let mut e = entry();
        e.context.copd_documented = true;
        e.context.baseline_spo2 = None;
        assert!(e.validate().is_err());
    }

    #[test]
    fn catalogue_shape_guards() {
        let mut t = Taxonomy::shipped();
        t.entries.pop();
        assert!(matches!(t.validate(), Err(TaxonomyError::InvariantViolation(_))));

        let mut t = Taxonomy::shipped();
        t.entries[0].epoch_count += 1;
        assert!(matches!(t.validate(), Err(TaxonomyError::InvariantViolation(_))));

        let mut t = Taxonomy::shipped();
        t.entries[1].case_id = t.entries[0].case_id.clone();
        assert!(matches!(t.validate(), Err(TaxonomyError::InvariantViolation(_))));
    }

    #[test]
    fn choice_serializes_as_tagged_object() {
        let c: Choice<DeviceStatus> = serde_json::from_str(r#"{"uniform":["ok","probe_cover"]}"#).unwrap();
        assert_eq!(c, Choice::Uniform(vec![DeviceStatus::Ok, DeviceStatus::ProbeCover]));
        assert!(serde_json::from_str::<Choice<DeviceStatus>>(r#"{"fixed":"loose_probe"}"#).is_err());
        let c: Choice<Option<SelfReportedActivity>> = serde_json::from_str(r#"{"uniform":[null,"walking"]}"#).unwrap();
        assert_eq!(c, Choice::Uniform(vec![None, Some(SelfReportedActivity::Walking)]));
    }
}
